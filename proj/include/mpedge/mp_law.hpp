#pragma once

#include <iosfwd>
#include <utility>
#include <vector>

namespace mpedge {

// Marchenko-Pastur law with aspect ratio rho: continuous density
// sqrt((a+ - x)(x - a-)) / (2 pi rho x) on [a-, a+], a± = (1 ± sqrt(rho))^2,
// plus an atom of mass (rho-1)/rho at 0 when rho > 1.
struct MPParams {
    double rho = 1.0;

    explicit MPParams(double r);

    double edge_lower() const;
    double edge_upper() const;
    double atom_mass() const;
    double continuous_mass() const;  // 1 - atom_mass()
};

std::pair<double, double> mp_edges(double rho);

// Density value at x; 0 outside the support. x = 0 with rho >= 1 is the
// atom location, not a density point, and is rejected.
double mp_density(double rho, double x);

// Distribution function: atom plus adaptive-Simpson quadrature of the
// density (absolute tolerance 1e-8; the left-edge square-root singularity
// is removed by substitution).
double mp_cdf(const MPParams& mp, double x);

// Quadrature of the density over the whole support (tests it against
// continuous_mass()).
double mp_continuous_integral(const MPParams& mp);

// Empirical spectral distribution of an empirical covariance matrix. The
// eigenvalue list keeps the 1/m normalization (total mass n/m); distance
// computations compare the probability-normalized shape (1/n weights)
// against the unit-mass reference law.
struct ESD {
    std::vector<double> eigenvalues;  // ascending
    int dim = 0;
    int sample_count = 0;

    double total_mass() const { return static_cast<double>(dim) / sample_count; }
};

// Sorts and clamps numerically-zero negatives (PSD input).
ESD make_esd(std::vector<double> eigenvalues, int sample_count);

// Kolmogorov-Smirnov distance between the (probability-normalized) ESD and
// the reference law, atoms included.
double ks_distance(const ESD& esd, const MPParams& mp);

// x,density,cdf table over the support for plotting.
void write_mp_table_csv(std::ostream& os, const MPParams& mp, int points);

}  // namespace mpedge
