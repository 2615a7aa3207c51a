#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mpedge/barrier_lower.hpp"  // WalkViolation
#include "mpedge/samplers.hpp"
#include "mpedge/spectral.hpp"

namespace mpedge {

struct UpperShiftParams {
    double eps = 0.1;           // in (0, 1/4]
    double alpha = 0.0;         // in (0, sqrt(gamma)/(1+sqrt(gamma)))
    double kappa = 1.0;         // moment exponent of the E-Delta2 bound
    double moment_bound = 1.0;  // K >= 1, sup_y E|<X,y>|^{2+kappa}
};

// Q1(Delta) = x^T (u+Delta-A)^{-1} x, for u above the spectrum.
double upper_q1(const SymmetricSpectrum& spec, const RankOneVector& x, double u, double delta);

// Q2(Delta) = x^T (u+Delta-A)^{-2} x / (m(u) - m(u+Delta)), Delta > 0.
double upper_q2(const SymmetricSpectrum& spec, const RankOneVector& x, double u, double delta);

// F2(Delta) = x^T (u+Delta-A)^{-2} x / sum_i [(u+Delta-lambda_i)(u-lambda_i)]^{-1};
// satisfies F2(Delta) = Delta Q2(Delta) for Delta > 0.
double upper_f2(const SymmetricSpectrum& spec, const RankOneVector& x, double u, double delta);

// Base-4 dyadic partition of the gaps u - lambda_i: index i lands in bin j
// iff 4^{j-1} <= u - lambda_i < 4^j. Gaps below 1 land in `residual`, which
// healthy runs keep empty.
struct LevelSets {
    std::vector<std::vector<int>> bins;  // bins[j-1] holds I_j
    std::vector<int> residual;
    double max_ratio16 = 0.0;  // max_j |I_j| / 16^j

    int bin_count() const { return static_cast<int>(bins.size()); }
};

LevelSets level_sets(const SymmetricSpectrum& spec, double u);

// h_j = sum_{i in I_j} <x,x_i>^2 - |I_j| per bin (0 for empty bins).
std::vector<double> h_excess(const LevelSets& levels, const RankOneVector& x);

// Largest alpha with (1+alpha)/(1-t-alpha) <= (1+eps)/(1-t) on
// t in (0, 1/(1+sqrt(gamma))]; closed form eps (1-t*) / (2+eps-t*).
double select_alpha(double gamma, double eps);

struct Delta1Result {
    double delta1 = 0.0;
    LevelSets levels;
    std::vector<double> h;
    // Q1(Delta1) <= m(u+Delta1) + 6 sqrt(eps) + 8 eps sqrt(n * max_ratio16)
    // holds whenever the residual set is empty; slack = rhs - lhs.
    double conclusion_slack = 0.0;
    bool conclusion_checked = false;
};

// Delta1 = eps^{-1/2} |x|^2 1{eps |x|^2 >= n}
//          + sum_{j <= log4(n/eps^2)} eps^{-1} h_j 1{h_j > eps^2 2^j sqrt(|I_j|)}.
Delta1Result shift_delta1(const SymmetricSpectrum& spec, const RankOneVector& x, double u,
                          double eps);

// Two-branch shift keeping Q2(Delta2) <= 1 - m(u) - alpha; zero iff x = 0.
// Throws numeric_precondition_error when m(u) + alpha >= 1.
double shift_delta2(const SymmetricSpectrum& spec, const RankOneVector& x, double u, double alpha);

// Smallest integer l >= 0 with m(v+l) - m(v+l+1) <= 1/(2 eps n) on the
// updated spectrum.
int regularity_shift_upper(const SymmetricSpectrum& updated, double v, double eps, int n);

// sup_y E|<X,y>|^3 : analytic for the gaussian family, otherwise a Monte
// Carlo estimate over coordinate/diagonal/random directions (reported with
// the expectation trends; the walk itself does not depend on it).
double estimate_moment_bound(const SamplerModel& model, int trials = 4000);

struct UpperWalkRow {
    int step = 0;
    double barrier = 0;
    double lambda_max = 0;
    double potential = 0;
    double delta1 = 0;
    double delta2 = 0;
    int delta_reg = 0;
    double cum_regularity = 0;
    double max_level_ratio = 0;
    std::string violation;
};

struct UpperWalkOptions {
    double eps = 0.1;
    std::optional<double> alpha;         // default select_alpha(m/n, eps)
    double kappa = 1.0;                  // moment exponent of the E-Delta2 bound
    std::optional<double> moment_bound;  // default analytic/estimated per family
    UpdateMode mode = UpdateMode::incremental;
    int refresh_interval = 0;
    bool keep_trajectory = true;
};

struct UpperWalkResult {
    int n = 0, m = 0;
    UpperShiftParams params;
    double eps = 0, alpha = 0;
    std::vector<UpperWalkRow> trajectory;
    std::vector<WalkViolation> violations;
    std::vector<WalkViolation> warnings;  // residual level sets, composed-certificate misses
    bool feasible = false;

    double barrier_final = 0;     // u_m
    double lambda_max_final = 0;  // fresh decomposition of the accumulated matrix
    double ratio = 0;             // u_m / (sqrt m + sqrt n)^2
    double initial_potential = 0; // n / (n + sqrt(mn))
    double final_potential = 0;
    double regularity_total = 0;
    double regularity_budget = 0; // 2 eps n
    double mean_delta1 = 0;
    double mean_delta2 = 0;
};

// Barrier walk above the spectrum: u_0 = n + sqrt(mn), then
// u_k = u_{k-1} + Delta1^k + Delta2^k + DeltaR^k. Requires m >= 1.
UpperWalkResult run_upper_walk(const SamplerModel& model, int m, const UpperWalkOptions& options);
UpperWalkResult run_upper_walk(const SampleBatch& batch, const UpperWalkOptions& options);

// CSV columns: k,u_k,lambda_max,potential,Delta1,Delta2,Delta_R,max_level_ratio,violations
void write_upper_trajectory_csv(std::ostream& os, const UpperWalkResult& result);

}  // namespace mpedge
