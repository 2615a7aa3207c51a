#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mpedge/samplers.hpp"
#include "mpedge/spectral.hpp"

namespace mpedge {

// Accuracy parameter of the feasible lower shift and the thresholds
// derived from it.
struct LowerShiftParams {
    double eps = 0.2;  // in (0, 1)

    double truncation_level() const { return 1.0 / eps; }        // cap on <x,x_i>^2
    double gap_requirement() const { return 2.0 / (eps * eps); } // needed lambda_min - u
    bool asymptotic_regime() const { return eps < 1.0 / 1728.0; }
};

// q1(delta) = x^T (A - u - delta)^{-1} x, for u + delta below the spectrum.
double lower_q1(const SymmetricSpectrum& spec, const RankOneVector& x, double u, double delta);

// q2(delta) = x^T (A-u-delta)^{-2} x / tr((A-u-delta)^{-2}).
double lower_q2(const SymmetricSpectrum& spec, const RankOneVector& x, double u, double delta);

struct LowerShift {
    double delta = 0.0;
    bool gap_ok = false;          // lambda_min - u >= 2/eps^2 held
    bool indicator = false;       // q1(1/eps) <= (1+eps) m(u) + eps
    bool q1_evaluable = false;    // gap wide enough to evaluate q1(1/eps)
    double q1_truncated = 0.0;
    double potential = 0.0;       // m(u) at entry
    double certificate = 0.0;     // q2(delta) - delta (1 + q1(delta)), when delta > 0
};

// The truncated shift
//   delta = (1-eps) 1{q1(1/eps) <= (1+eps) m(u) + eps} / ((1+eps)(1+m(u)))
//           * [sum_i (lambda_i-u)^{-2}]^{-1}
//             sum_i <x,x_i>^2 1{<x,x_i>^2 <= 1/eps} / (lambda_i-u)^2.
// Under the gap condition lambda_min - u >= 2/eps^2 the result satisfies
// delta <= 1/eps, u + delta < lambda_min and q2(delta) >= delta (1+q1(delta)),
// so the barrier may advance by delta without increasing the potential.
// When the gap condition fails the shift degrades to 0 (always feasible)
// and the caller is expected to log the event.
LowerShift feasible_lower_shift(const SymmetricSpectrum& spec, const RankOneVector& x, double u,
                                const LowerShiftParams& params);

// Smallest integer l >= 0 with m(v-l) - m(v-l-1) <= 1/(eps n), evaluated on
// the updated spectrum. Keeps the barrier far enough from the spectrum for
// the concentration step; the walk's deterministic budget caps the total.
int regularity_shift_lower(const SymmetricSpectrum& updated, double v, double eps, int n);

struct WalkViolation {
    int step = 0;
    std::string reason;
};

struct LowerWalkRow {
    int step = 0;
    double barrier = 0;
    double lambda_min = 0;
    double potential = 0;
    double delta = 0;
    int delta_reg = 0;
    double cum_regularity = 0;
    std::string violation;
};

struct LowerWalkOptions {
    double eps = 0.2;
    UpdateMode mode = UpdateMode::incremental;
    int refresh_interval = 0;  // re-decompose the accumulated matrix every k steps (0 = never)
    bool keep_trajectory = true;
};

struct LowerWalkResult {
    int n = 0, m = 0;
    double eps = 0;
    std::vector<LowerWalkRow> trajectory;  // rows k = 0..m while feasible
    std::vector<WalkViolation> violations; // hard invariant failures
    std::vector<WalkViolation> warnings;   // gap-condition fallbacks
    bool feasible = false;

    double barrier_final = 0;      // u_m
    double lambda_min_final = 0;   // fresh decomposition of the accumulated matrix
    double ratio = 0;              // u_m / (sqrt m - sqrt n)^2
    double initial_potential = 0;  // n / (sqrt(mn) - n)
    double final_potential = 0;
    double regularity_total = 0;
    double regularity_budget = 0;  // eps n^2 / (sqrt(mn) - n)
    double mean_delta = 0;
    int gap_fallback_steps = 0;
    int concentration_events = 0;   // q1(1/eps) + 1 >= (1+eps)(1 + m(u))
    int concentration_samples = 0;  // steps where q1(1/eps) was evaluable
};

// Barrier walk below the spectrum: u_0 = n - sqrt(mn), then
// u_k = u_{k-1} + delta^k - deltaR^k across the m rank-one updates.
// Requires m > n.
LowerWalkResult run_lower_walk(const SamplerModel& model, int m, const LowerWalkOptions& options);
LowerWalkResult run_lower_walk(const SampleBatch& batch, const LowerWalkOptions& options);

// CSV columns: k,u_k,lambda_min,potential,delta,delta_R,violation
void write_lower_trajectory_csv(std::ostream& os, const LowerWalkResult& result);

}  // namespace mpedge
