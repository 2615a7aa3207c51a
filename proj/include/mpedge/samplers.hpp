#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <string>

#include "mpedge/rng.hpp"

namespace mpedge {

// Isotropic vector families. All are centered with identity covariance
// (standardization constants are analytic), except `zero_stub`, which
// always returns the zero vector and exists only to exercise walk plumbing.
enum class Family {
    gaussian,
    rademacher,
    student_t,          // nu > 2, scaled by sqrt(nu/(nu-2))
    symmetric_pareto,   // tail index a in (2,4]; finite variance, infinite 4th moment
    exponential_product,// symmetric Laplace coordinates, b = 1/sqrt(2)
    uniform_ball,       // uniform on the ball of radius sqrt(n+2)
    zero_stub,
};

struct SamplerModel {
    Family family = Family::gaussian;
    int dim = 0;
    std::uint64_t seed = 0;
    double nu = 0.0;          // student_t only
    double tail_index = 0.0;  // symmetric_pareto only

    // iid coordinates (as opposed to the ball model / the stub)?
    bool iid_coordinates() const;
    bool log_concave() const;

    SamplerModel with_dim(int n) const;
    SamplerModel with_seed(std::uint64_t s) const;

    // Base stream all draws for this model derive from.
    RngStream stream() const { return RngStream(seed).split(0x5a); }

    std::string family_name() const;

    // Flat key-value round trip (family, params, n, seed).
    std::map<std::string, std::string> to_kv() const;
    static SamplerModel from_kv(const std::map<std::string, std::string>& kv);
};

SamplerModel make_gaussian(int n, std::uint64_t seed);
SamplerModel make_rademacher(int n, std::uint64_t seed);
SamplerModel make_student_t(int n, double nu, std::uint64_t seed);
SamplerModel make_symmetric_pareto(int n, double tail_index, std::uint64_t seed);
SamplerModel make_exponential_product(int n, std::uint64_t seed);
SamplerModel make_uniform_ball(int n, std::uint64_t seed);
SamplerModel make_zero_stub(int n, std::uint64_t seed);

// "gaussian", "student_t(3)", "pareto(3)", "laplace", "uniform_ball", "zero"...
SamplerModel parse_model(const std::string& text, int n, std::uint64_t seed);

// Analytic standardization constants.
double student_t_scale(double nu);       // sqrt(nu/(nu-2))
double pareto_threshold(double a);       // x0 = sqrt((a-2)/a), unit variance
double uniform_ball_radius(int n);       // sqrt(n+2)

struct SampleBatch {
    Eigen::MatrixXd rows;  // one sample per row, m x n
    SamplerModel model;
    std::uint64_t stream_draws = 0;  // counter position after the last row

    int sample_count() const { return static_cast<int>(rows.rows()); }
    int dim() const { return static_cast<int>(rows.cols()); }
};

// One draw from the model, advancing the caller's stream.
Eigen::VectorXd sample_vector(const SamplerModel& model, RngStream& stream);

// m independent draws from the model's own stream; bit-identical for equal
// (model, seed, m, n).
SampleBatch sample_batch(const SamplerModel& model, int m);

// (1/m) sum of row outer products; positive semidefinite.
Eigen::MatrixXd empirical_covariance(const SampleBatch& batch);

// m * empirical covariance, i.e. the Gram matrix of the rows.
Eigen::MatrixXd gram_matrix(const SampleBatch& batch);

}  // namespace mpedge
