#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "mpedge/samplers.hpp"

namespace mpedge {

// Orthogonal projection given by an orthonormal basis of its range.
struct ProjectionSpec {
    int dim = 0;
    int rank = 0;
    Eigen::MatrixXd basis;  // dim x rank, orthonormal columns
    std::string provenance;

    Eigen::MatrixXd matrix() const { return basis * basis.transpose(); }
    Eigen::VectorXd diagonal() const { return basis.rowwise().squaredNorm(); }
};

// Haar-distributed range via an orthonormalized Gaussian frame.
ProjectionSpec random_projection(int n, int r, std::uint64_t seed);
ProjectionSpec coordinate_projection(int n, const std::vector<int>& coords);

// Decay profiles entering the tail-projection bounds.
struct TailFunctions {
    std::function<double(int)> f;  // values in [0,1], non-increasing
    std::function<double(int)> g;  // positive, non-increasing

    // f(r) = r^{-1/4}, g(r) = 10/sqrt(r); sharp enough to separate the
    // light- and heavy-tailed families at desk scale.
    static TailFunctions defaults();
};

struct TailCell {
    std::string model;
    int n = 0;
    int r = 0;
    double t = 0;
    double p_hat = 0;
    double std_err = 0;
    double bound = 0;
    bool pass = false;
};

struct TailReport {
    std::vector<TailCell> cells;
    bool all_pass() const;
    void write_csv(std::ostream& os) const;
};

// Empirical P(|P X|^2 - rank >= t) with binomial standard error.
std::pair<double, double> estimate_projection_tail(const SamplerModel& model,
                                                   const ProjectionSpec& proj, double t,
                                                   int trials);

// Tail-projection check on a grid. Thresholds are multiples of the rank
// (t = factor * r); every factor must satisfy factor >= f(r) so the cells
// stay inside the property's domain t >= f(r) r. A cell passes when
// p_hat <= g(r) r / t^2 + 3 stderr.
TailReport check_stp(const SamplerModel& model, const std::vector<int>& ranks,
                     const std::vector<double>& t_factors, int trials,
                     const TailFunctions& tails);

struct UniformIntegrabilityRow {
    int n = 0;
    double M = 0;
    double sup_estimate = 0;      // max over directions of E(<X,y>^2 1{<X,y>^2 >= M})
    std::string argmax_direction;
};

struct UniformIntegrabilityReport {
    std::vector<UniformIntegrabilityRow> rows;
    void write_csv(std::ostream& os) const;
};

// Truncated second moments of one-dimensional marginals, maximized over a
// direction set (first coordinate, the diagonal direction, and Haar-random
// unit vectors). Estimates reuse one sample set per n, so the sup-estimate
// is non-increasing in M by construction.
UniformIntegrabilityReport check_wtp_a(const SamplerModel& base, const std::vector<int>& n_grid,
                                       const std::vector<double>& M_grid, int directions_per_n,
                                       int trials);

struct DecouplingReport {
    int n = 0, r = 0, trials = 0;
    double second_moment = 0, second_moment_stderr = 0, second_moment_bound = 0;  // 64 r
    double tail_freq = 0, tail_stderr = 0, tail_bound = 0;  // at r^{3/4}, 64/sqrt(r)
    bool pass_second = false, pass_tail = false;
};

// Moment facts for the hollowed quadratic form <X, P0 X>, P0 = P with the
// diagonal zeroed. Requires iid coordinates.
DecouplingReport decoupled_moment_check(const SamplerModel& model, const ProjectionSpec& proj,
                                        int trials);

}  // namespace mpedge
