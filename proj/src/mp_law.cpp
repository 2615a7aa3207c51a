#include "mpedge/mp_law.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace mpedge {

namespace {

constexpr double kQuadTol = 1e-8;

// Integrand after x = a- + L s^2: the s factor from dx cancels the left-edge
// square root, so the function is smooth even when a- = 0.
struct SubstitutedDensity {
    double a_minus, length, rho;

    double operator()(double s) const {
        const double x = a_minus + length * s * s;
        const double upper = std::max((a_minus + length) - x, 0.0);
        if (a_minus == 0.0) {
            // x = L s^2 cancels the s^2 factor exactly (the rho = 1 case)
            return std::sqrt(length * upper) / (M_PI * rho);
        }
        return std::pow(length, 1.5) * s * s * std::sqrt(upper) / (M_PI * rho * x);
    }
};

double simpson(double a, double fa, double b, double fb, double fm) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_step(const SubstitutedDensity& f, double a, double b, double fa, double fb,
                     double fm, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = simpson(a, fa, m, fm, flm);
    const double right = simpson(m, fm, b, fb, frm);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) {
        return left + right + (left + right - whole) / 15.0;
    }
    return adaptive_step(f, a, m, fa, fm, flm, left, 0.5 * tol, depth - 1) +
           adaptive_step(f, m, b, fm, fb, frm, right, 0.5 * tol, depth - 1);
}

double integrate_density(const MPParams& mp, double s_hi) {
    if (s_hi <= 0.0) return 0.0;
    const SubstitutedDensity f{mp.edge_lower(), mp.edge_upper() - mp.edge_lower(), mp.rho};
    const double fa = f(0.0);
    const double fb = f(s_hi);
    const double fm = f(0.5 * s_hi);
    const double whole = simpson(0.0, fa, s_hi, fb, fm);
    return adaptive_step(f, 0.0, s_hi, fa, fb, fm, whole, kQuadTol, 48);
}

}  // namespace

MPParams::MPParams(double r) : rho(r) {
    if (!(r > 0.0)) throw std::invalid_argument("rho must be positive");
}

double MPParams::edge_lower() const {
    const double s = 1.0 - std::sqrt(rho);
    return s * s;
}

double MPParams::edge_upper() const {
    const double s = 1.0 + std::sqrt(rho);
    return s * s;
}

double MPParams::atom_mass() const { return rho > 1.0 ? (rho - 1.0) / rho : 0.0; }

double MPParams::continuous_mass() const { return 1.0 - atom_mass(); }

std::pair<double, double> mp_edges(double rho) {
    const MPParams mp(rho);
    return {mp.edge_lower(), mp.edge_upper()};
}

double mp_density(double rho, double x) {
    const MPParams mp(rho);
    if (x == 0.0 && rho >= 1.0) {
        throw std::invalid_argument("x = 0 carries the atom for rho >= 1, not a density value");
    }
    if (x < mp.edge_lower() || x > mp.edge_upper()) return 0.0;
    const double prod = (mp.edge_upper() - x) * (x - mp.edge_lower());
    return std::sqrt(std::max(prod, 0.0)) / (rho * 2.0 * M_PI * x);
}

double mp_cdf(const MPParams& mp, double x) {
    double acc = (x >= 0.0) ? mp.atom_mass() : 0.0;
    if (x <= mp.edge_lower()) return acc;
    const double length = mp.edge_upper() - mp.edge_lower();
    const double s_hi = std::sqrt(std::min((x - mp.edge_lower()) / length, 1.0));
    return acc + integrate_density(mp, s_hi);
}

double mp_continuous_integral(const MPParams& mp) { return integrate_density(mp, 1.0); }

ESD make_esd(std::vector<double> eigenvalues, int sample_count) {
    if (eigenvalues.empty()) throw std::invalid_argument("empty spectrum");
    if (sample_count < 1) throw std::invalid_argument("sample count must be >= 1");
    double scale = 0.0;
    for (double v : eigenvalues) scale = std::max(scale, std::abs(v));
    for (double& v : eigenvalues) {
        if (std::abs(v) <= 1e-10 * scale) v = 0.0;
    }
    std::sort(eigenvalues.begin(), eigenvalues.end());
    ESD esd;
    esd.dim = static_cast<int>(eigenvalues.size());
    esd.sample_count = sample_count;
    esd.eigenvalues = std::move(eigenvalues);
    return esd;
}

double ks_distance(const ESD& esd, const MPParams& mp) {
    const int n = esd.dim;
    double dist = 0.0;
    // Tied eigenvalues jump together; the left limit at 0 excludes the atom.
    for (int i = 0; i < n;) {
        int j = i;
        while (j < n && esd.eigenvalues[j] == esd.eigenvalues[i]) ++j;
        const double x = esd.eigenvalues[i];
        const double cdf_right = mp_cdf(mp, x);
        const double cdf_left = (x == 0.0) ? cdf_right - mp.atom_mass() : cdf_right;
        dist = std::max(dist, std::abs(cdf_right - static_cast<double>(j) / n));
        dist = std::max(dist, std::abs(cdf_left - static_cast<double>(i) / n));
        i = j;
    }
    return std::min(dist, 1.0);
}

void write_mp_table_csv(std::ostream& os, const MPParams& mp, int points) {
    if (points < 2) throw std::invalid_argument("need at least two table points");
    os << "x,density,cdf\n";
    const double lo = mp.edge_lower();
    const double hi = mp.edge_upper();
    for (int i = 0; i < points; ++i) {
        const double x = lo + (hi - lo) * i / (points - 1);
        const double dens = (x == 0.0 && mp.rho >= 1.0) ? 0.0 : mp_density(mp.rho, x);
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g\n", x, dens, mp_cdf(mp, x));
        os << buf;
    }
}

}  // namespace mpedge
