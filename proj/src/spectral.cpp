#include "mpedge/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace mpedge {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void require_square_finite(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("matrix must be square");
    if (m.size() == 0) throw std::invalid_argument("matrix must be non-empty");
    if (!m.allFinite()) throw std::invalid_argument("matrix has non-finite entries");
}

struct GivensRotation {
    int lo, hi;    // plane indices, lo < hi
    double c, s;   // z'_lo = c z_lo - s z_hi = 0, z'_hi = s z_lo + c z_hi
};

// Eigensystem of diag(d) + z z^T for strictly sorted problems after
// deflation. Roots are solved in an offset variable anchored at the nearest
// pole so that differences d_k - mu stay accurate, and the weights are
// recomputed from the computed roots (Lowner's formula) before forming
// eigenvectors; that keeps the rotation orthonormal to machine precision.
class SecularUpdate {
public:
    SecularUpdate(const Eigen::VectorXd& d, const Eigen::VectorXd& z, bool want_vectors)
        : n_(static_cast<int>(d.size())), d_(d), z_(z), want_vectors_(want_vectors) {
        deflate();
        solve_roots();
        if (want_vectors_) build_vectors();
        assemble();
    }

    const Eigen::VectorXd& values() const { return values_; }
    const Eigen::MatrixXd& vectors() const { return vectors_; }

private:
    void deflate() {
        deflated_.assign(n_, false);
        const double znorm = z_.norm();
        const double ztol = 1e-12 * znorm;
        for (int i = 0; i < n_; ++i) {
            if (std::abs(z_(i)) <= ztol) deflated_[i] = true;
        }
        // Nearly equal poles: rotate the pair so one component of z vanishes.
        const double dscale = std::max({std::abs(d_(0)), std::abs(d_(n_ - 1)), znorm * znorm, 1.0});
        const double dtol = 64.0 * kEps * dscale;
        int prev = -1;
        for (int i = 0; i < n_; ++i) {
            if (deflated_[i]) continue;
            if (prev >= 0 && d_(i) - d_(prev) <= dtol) {
                const double r = std::hypot(z_(prev), z_(i));
                rotations_.push_back({prev, i, z_(i) / r, z_(prev) / r});
                z_(i) = r;
                z_(prev) = 0.0;
                deflated_[prev] = true;
            }
            prev = i;
        }
        for (int i = 0; i < n_; ++i) {
            if (!deflated_[i]) active_.push_back(i);
        }
        p_ = static_cast<int>(active_.size());
        dd_.resize(p_);
        zz_.resize(p_);
        for (int k = 0; k < p_; ++k) {
            dd_(k) = d_(active_[k]);
            zz_(k) = z_(active_[k]);
        }
    }

    double secular_offset(double s, int anchor) const {
        double acc = 1.0;
        const double base = dd_(anchor);
        for (int j = 0; j < p_; ++j) {
            acc += zz_(j) * zz_(j) / ((dd_(j) - base) - s);
        }
        return acc;
    }

    // One pass for the secular function and its derivative.
    void secular_offset_pair(double s, int anchor, double* g, double* gp) const {
        double acc = 1.0, der = 0.0;
        const double base = dd_(anchor);
        for (int j = 0; j < p_; ++j) {
            const double inv = 1.0 / ((dd_(j) - base) - s);
            const double term = zz_(j) * zz_(j) * inv;
            acc += term;
            der += term * inv;
        }
        *g = acc;
        *gp = der;
    }

    // Initial guess from the two poles adjacent to the bracket: the other
    // terms are frozen at c (their value at the current point) and the
    // remaining quadratic is solved for the root inside (lo, hi).
    double two_pole_guess(double lo, double hi, int anchor, int k, double s, double g,
                          double gp) const {
        const double d1 = dd_(k) - dd_(anchor);
        const double d2 = (k + 1 < p_) ? dd_(k + 1) - dd_(anchor) : 0.0;
        const double w1 = zz_(k) * zz_(k);
        const double w2 = (k + 1 < p_) ? zz_(k + 1) * zz_(k + 1) : 0.0;
        const double i1 = 1.0 / (d1 - s);
        const double i2 = (k + 1 < p_) ? 1.0 / (d2 - s) : 0.0;
        const double c = g - w1 * i1 - w2 * i2;
        // c s^2 - (c (d1+d2) + w1 + w2) s + (c d1 d2 + w1 d2 + w2 d1) = 0
        const double b = c * (d1 + d2) + w1 + w2;
        const double q = c * d1 * d2 + w1 * d2 + w2 * d1;
        double cand;
        if (c == 0.0) {
            cand = b != 0.0 ? q / b : s;
        } else {
            const double disc = b * b - 4.0 * c * q;
            if (disc < 0.0) return s - g / gp;
            const double sq = std::sqrt(disc);
            // the stable twin of the quadratic roots, picked inside the bracket
            const double r1 = (b >= 0.0) ? (b + sq) / (2.0 * c) : (2.0 * q) / (b - sq);
            const double r2 = (b >= 0.0) ? (2.0 * q) / (b + sq) : (b - sq) / (2.0 * c);
            cand = (r1 > lo && r1 < hi) ? r1 : r2;
        }
        if (!(cand > lo && cand < hi)) cand = s - g / gp;
        return cand;
    }

    // Safeguarded Newton on the offset variable; (lo, hi) brackets the root,
    // the secular function is increasing and changes sign inside. k is the
    // index of the bracket's lower pole.
    double solve_bracket(double lo, double hi, int anchor, int k) const {
        double s = 0.5 * (lo + hi);
        for (int iter = 0; iter < 100; ++iter) {
            double g, gp;
            secular_offset_pair(s, anchor, &g, &gp);
            if (g == 0.0) return s;
            if (g > 0.0) {
                hi = s;
            } else {
                lo = s;
            }
            double next = iter == 0 ? two_pole_guess(lo, hi, anchor, k, s, g, gp) : s - g / gp;
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            if (std::abs(next - s) <= 2.0 * kEps * (std::abs(next) + std::abs(hi - lo)) ||
                hi - lo <= 4.0 * kEps * std::max(std::abs(lo), std::abs(hi))) {
                return next;
            }
            s = next;
        }
        return s;
    }

    void solve_roots() {
        anchor_.resize(p_);
        offset_.resize(p_);
        if (p_ == 0) return;
        const double weight_total = zz_.squaredNorm();
        for (int k = 0; k < p_; ++k) {
            if (k + 1 < p_) {
                const double gap = dd_(k + 1) - dd_(k);
                const double mid = 0.5 * (dd_(k) + dd_(k + 1));
                double fmid = 1.0;
                for (int j = 0; j < p_; ++j) fmid += zz_(j) * zz_(j) / (dd_(j) - mid);
                if (fmid <= 0.0) {
                    // root in the upper half, anchor at the right pole
                    anchor_[k] = k + 1;
                    offset_[k] = solve_bracket(-0.5 * gap, 0.0, k + 1, k);
                } else {
                    anchor_[k] = k;
                    offset_[k] = solve_bracket(0.0, 0.5 * gap, k, k);
                }
            } else {
                anchor_[k] = p_ - 1;
                if (secular_offset(weight_total, p_ - 1) <= 0.0) {
                    offset_[k] = weight_total;
                } else {
                    offset_[k] = solve_bracket(0.0, weight_total, p_ - 1, p_ - 1);
                }
            }
        }
    }

    double root_minus_pole(int root, int pole) const {
        // mu_root - dd_pole without cancellation near the pole
        return (dd_(anchor_[root]) - dd_(pole)) + offset_[root];
    }

    void build_vectors() {
        // Recompute |z_hat_k| so that the computed roots are exact roots of
        // the perturbed problem; all grouped factors lie in (0, 1].
        zhat_.resize(p_);
        for (int k = 0; k < p_; ++k) {
            double prod = root_minus_pole(p_ - 1, k);
            for (int j = 0; j < k; ++j) prod *= root_minus_pole(j, k) / (dd_(j) - dd_(k));
            for (int j = k; j < p_ - 1; ++j) prod *= root_minus_pole(j, k) / (dd_(j + 1) - dd_(k));
            zhat_(k) = std::copysign(std::sqrt(std::max(prod, 0.0)), zz_(k));
        }
        wcols_.resize(p_, p_);
        for (int i = 0; i < p_; ++i) {
            if (offset_[i] == 0.0) {
                wcols_.col(i).setZero();
                wcols_(anchor_[i], i) = 1.0;
                continue;
            }
            for (int k = 0; k < p_; ++k) {
                wcols_(k, i) = zhat_(k) / (-root_minus_pole(i, k));
            }
            wcols_.col(i).normalize();
        }
    }

    void assemble() {
        values_.resize(n_);
        std::vector<int> source(n_);  // < 0: deflated index ~(i); >= 0: root id
        int pos = 0;
        for (int i = 0; i < n_; ++i) {
            if (deflated_[i]) {
                values_(pos) = d_(i);
                source[pos] = ~i;
                ++pos;
            }
        }
        for (int r = 0; r < p_; ++r) {
            values_(pos) = dd_(anchor_[r]) + offset_[r];
            source[pos] = r;
            ++pos;
        }
        std::vector<int> order(n_);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return values_(a) < values_(b); });

        Eigen::VectorXd sorted(n_);
        for (int i = 0; i < n_; ++i) sorted(i) = values_(order[i]);
        if (want_vectors_) {
            vectors_.setZero(n_, n_);
            for (int i = 0; i < n_; ++i) {
                const int src = source[order[i]];
                if (src < 0) {
                    vectors_(~src, i) = 1.0;
                } else {
                    for (int k = 0; k < p_; ++k) vectors_(active_[k], i) = wcols_(k, src);
                }
            }
            // undo the deflation rotations (left-multiplication, reverse order)
            for (auto it = rotations_.rbegin(); it != rotations_.rend(); ++it) {
                const Eigen::RowVectorXd row_lo = vectors_.row(it->lo);
                const Eigen::RowVectorXd row_hi = vectors_.row(it->hi);
                vectors_.row(it->lo) = it->c * row_lo + it->s * row_hi;
                vectors_.row(it->hi) = -it->s * row_lo + it->c * row_hi;
            }
        }
        values_ = std::move(sorted);
    }

    int n_;
    Eigen::VectorXd d_;
    Eigen::VectorXd z_;
    bool want_vectors_;

    std::vector<bool> deflated_;
    std::vector<GivensRotation> rotations_;
    std::vector<int> active_;
    int p_ = 0;
    Eigen::VectorXd dd_, zz_, zhat_;
    std::vector<int> anchor_;
    std::vector<double> offset_;
    Eigen::MatrixXd wcols_;

    Eigen::VectorXd values_;
    Eigen::MatrixXd vectors_;
};

}  // namespace

Eigen::MatrixXd SymmetricSpectrum::reconstruct() const {
    Eigen::MatrixXd m = eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose();
    return 0.5 * (m + m.transpose()).eval();
}

double SymmetricSpectrum::gram_deviation() const {
    Eigen::MatrixXd gram = eigenvectors.transpose() * eigenvectors;
    gram.diagonal().array() -= 1.0;
    return gram.cwiseAbs().maxCoeff();
}

RankOneVector project_onto(const SymmetricSpectrum& spec, const Eigen::VectorXd& x) {
    if (x.size() != spec.dim) throw std::invalid_argument("vector/spectrum dimension mismatch");
    RankOneVector out;
    out.entries = x;
    out.projections = spec.eigenvectors.transpose() * x;
    return out;
}

SymmetricSpectrum eigendecompose(const Eigen::MatrixXd& matrix) {
    require_square_finite(matrix);
    const double scale = std::max(1.0, matrix.cwiseAbs().maxCoeff());
    const double asym = (matrix - matrix.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10 * scale) throw std::invalid_argument("matrix is not symmetric");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(matrix);
    if (solver.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");

    SymmetricSpectrum spec;
    spec.dim = static_cast<int>(matrix.rows());
    spec.eigenvalues = solver.eigenvalues().reverse();
    spec.eigenvectors = solver.eigenvectors().rowwise().reverse();
    return spec;
}

SymmetricSpectrum rank_one_update(const SymmetricSpectrum& spec, const RankOneVector& x,
                                  UpdateMode mode) {
    if (x.entries.size() != spec.dim) throw std::invalid_argument("vector/spectrum dimension mismatch");
    if (mode == UpdateMode::full) {
        Eigen::MatrixXd m = spec.reconstruct();
        m.selfadjointView<Eigen::Lower>().rankUpdate(x.entries);
        Eigen::MatrixXd sym = m.selfadjointView<Eigen::Lower>();
        return eigendecompose(sym);
    }

    const Eigen::VectorXd d = spec.eigenvalues.reverse();
    const Eigen::VectorXd z = x.projections.reverse();
    SecularUpdate upd(d, z, /*want_vectors=*/true);

    SymmetricSpectrum out;
    out.dim = spec.dim;
    out.eigenvalues = upd.values().reverse();
    out.eigenvectors.noalias() = spec.eigenvectors * upd.vectors().reverse();
    return out;
}

double stieltjes_lower(const SymmetricSpectrum& spec, double u) {
    if (!(u < spec.lambda_min())) {
        throw barrier_violation("stieltjes_lower: u >= lambda_min");
    }
    double acc = 0.0;
    for (int i = 0; i < spec.dim; ++i) acc += 1.0 / (spec.eigenvalues(i) - u);
    return acc;
}

double stieltjes_upper(const SymmetricSpectrum& spec, double u) {
    if (!(u > spec.lambda_max())) {
        throw barrier_violation("stieltjes_upper: u <= lambda_max");
    }
    double acc = 0.0;
    for (int i = 0; i < spec.dim; ++i) acc += 1.0 / (u - spec.eigenvalues(i));
    return acc;
}

double sherman_morrison_trace(const SymmetricSpectrum& spec, const RankOneVector& x, double u) {
    if (x.projections.size() != spec.dim) throw std::invalid_argument("projection size mismatch");
    double trace = 0.0, quad1 = 0.0, quad2 = 0.0;
    for (int i = 0; i < spec.dim; ++i) {
        const double gap = spec.eigenvalues(i) - u;
        if (gap == 0.0) throw numeric_precondition_error("u is an eigenvalue of A");
        const double p2 = x.projections(i) * x.projections(i);
        trace += 1.0 / gap;
        quad1 += p2 / gap;
        quad2 += p2 / (gap * gap);
    }
    const double denom = 1.0 + quad1;
    if (std::abs(denom) < 1e-12) {
        throw numeric_precondition_error("sherman_morrison_trace: denominator near zero");
    }
    return trace - quad2 / denom;
}

namespace detail {

Eigen::VectorXd secular_eigenvalues(const Eigen::VectorXd& d_ascending, const Eigen::VectorXd& z) {
    if (d_ascending.size() != z.size()) throw std::invalid_argument("size mismatch");
    SecularUpdate upd(d_ascending, z, /*want_vectors=*/false);
    return upd.values();
}

}  // namespace detail

}  // namespace mpedge
