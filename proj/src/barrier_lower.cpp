#include "mpedge/barrier_lower.hpp"

#include <cmath>
#include <functional>
#include <ostream>
#include <stdexcept>

namespace mpedge {

namespace {

constexpr double kMonotoneSlack = 1e-9;

// One-pass evaluation of m(v-l) - m(v-l-1) without cancellation.
double lower_potential_difference(const SymmetricSpectrum& spec, double v, int l) {
    double acc = 0.0;
    for (int i = 0; i < spec.dim; ++i) {
        const double gap = spec.eigenvalues(i) - v + l;
        acc += 1.0 / (gap * (gap + 1.0));
    }
    return acc;
}

}  // namespace

double lower_q1(const SymmetricSpectrum& spec, const RankOneVector& x, double u, double delta) {
    const double shifted = u + delta;
    if (!(shifted < spec.lambda_min())) throw barrier_violation("q1: u + delta >= lambda_min");
    double acc = 0.0;
    for (int i = 0; i < spec.dim; ++i) {
        const double p = x.projections(i);
        acc += p * p / (spec.eigenvalues(i) - shifted);
    }
    return acc;
}

double lower_q2(const SymmetricSpectrum& spec, const RankOneVector& x, double u, double delta) {
    const double shifted = u + delta;
    if (!(shifted < spec.lambda_min())) throw barrier_violation("q2: u + delta >= lambda_min");
    double num = 0.0, den = 0.0;
    for (int i = 0; i < spec.dim; ++i) {
        const double gap = spec.eigenvalues(i) - shifted;
        const double p = x.projections(i);
        num += p * p / (gap * gap);
        den += 1.0 / (gap * gap);
    }
    return num / den;
}

LowerShift feasible_lower_shift(const SymmetricSpectrum& spec, const RankOneVector& x, double u,
                                const LowerShiftParams& params) {
    if (!(params.eps > 0.0 && params.eps < 1.0)) throw std::invalid_argument("eps must be in (0,1)");
    if (!(u < spec.lambda_min())) throw barrier_violation("feasible_lower_shift: u >= lambda_min");

    const double eps = params.eps;
    const double trunc = params.truncation_level();
    const double gap = spec.lambda_min() - u;

    LowerShift out;
    out.potential = stieltjes_lower(spec, u);
    // hair of slack so boundary cases like gap == 2/eps^2 with irrational
    // eps do not fall out of the regime through rounding
    out.gap_ok = gap >= params.gap_requirement() * (1.0 - 1e-12);
    out.q1_evaluable = gap > trunc;
    if (out.q1_evaluable) {
        out.q1_truncated = lower_q1(spec, x, u, trunc);
        out.indicator = out.q1_truncated <= (1.0 + eps) * out.potential + eps;
    }
    if (!out.gap_ok) {
        return out;  // delta = 0 is always feasible; caller logs the fallback
    }

    if (out.indicator) {
        double num = 0.0, den = 0.0;
        for (int i = 0; i < spec.dim; ++i) {
            const double g = spec.eigenvalues(i) - u;
            const double p2 = x.projections(i) * x.projections(i);
            if (p2 <= trunc) num += p2 / (g * g);
            den += 1.0 / (g * g);
        }
        out.delta = (1.0 - eps) / ((1.0 + eps) * (1.0 + out.potential)) * num / den;
    }

    if (out.delta > 0.0) {
        if (out.delta > trunc || !(u + out.delta < spec.lambda_min())) {
            throw std::logic_error("feasible lower shift escaped its own bounds");
        }
        out.certificate = lower_q2(spec, x, u, out.delta) -
                          out.delta * (1.0 + lower_q1(spec, x, u, out.delta));
    }
    return out;
}

int regularity_shift_lower(const SymmetricSpectrum& updated, double v, double eps, int n) {
    if (!(v < updated.lambda_min())) throw barrier_violation("regularity_shift_lower: v >= lambda_min");
    const double threshold = 1.0 / (eps * n);
    const int cap = static_cast<int>(std::ceil(n * std::sqrt(eps))) + 2;
    for (int l = 0; l <= cap; ++l) {
        if (lower_potential_difference(updated, v, l) <= threshold) return l;
    }
    throw std::runtime_error("regularity_shift_lower: scan exceeded its deterministic cap");
}

namespace {

LowerWalkResult run_lower_walk_impl(int n, int m, const LowerShiftParams& params,
                                    const LowerWalkOptions& options,
                                    const std::function<Eigen::VectorXd(int)>& draw) {
    if (m <= n) throw std::invalid_argument("lower walk requires m > n");

    LowerWalkResult result;
    result.n = n;
    result.m = m;
    result.eps = params.eps;
    const double sqrt_mn = std::sqrt(static_cast<double>(m) * n);
    result.regularity_budget = params.eps * n * static_cast<double>(n) / (sqrt_mn - n);

    Eigen::MatrixXd accum = Eigen::MatrixXd::Zero(n, n);
    SymmetricSpectrum spec;
    spec.dim = n;
    spec.eigenvalues = Eigen::VectorXd::Zero(n);
    spec.eigenvectors = Eigen::MatrixXd::Identity(n, n);

    double u = n - sqrt_mn;
    double potential = stieltjes_lower(spec, u);
    result.initial_potential = potential;

    auto log_violation = [&](int step, const char* reason) {
        result.violations.push_back({step, reason});
    };
    auto push_row = [&](int step, double delta, int delta_reg, const std::string& note) {
        if (!options.keep_trajectory) return;
        result.trajectory.push_back({step, u, spec.lambda_min(), potential, delta, delta_reg,
                                     result.regularity_total, note});
    };
    push_row(0, 0.0, 0, "");

    double delta_sum = 0.0;
    bool aborted = false;
    for (int k = 1; k <= m && !aborted; ++k) {
        const Eigen::VectorXd sample = draw(k - 1);
        const RankOneVector x = project_onto(spec, sample);
        std::string note;

        const LowerShift shift = feasible_lower_shift(spec, x, u, params);
        if (!shift.gap_ok) {
            result.warnings.push_back({k, "gap_condition"});
            ++result.gap_fallback_steps;
            note = "gap_condition";
        }
        if (shift.q1_evaluable) {
            ++result.concentration_samples;
            if (shift.q1_truncated + 1.0 >= (1.0 + params.eps) * (1.0 + shift.potential)) {
                ++result.concentration_events;
            }
        }
        if (shift.delta > 0.0 && shift.certificate < -kMonotoneSlack) {
            log_violation(k, "shift_certificate");
            note = "shift_certificate";
        }

        accum.selfadjointView<Eigen::Lower>().rankUpdate(sample);
        const bool refresh =
            options.mode == UpdateMode::full ||
            (options.refresh_interval > 0 && k % options.refresh_interval == 0);
        if (refresh) {
            Eigen::MatrixXd sym = accum.selfadjointView<Eigen::Lower>();
            spec = eigendecompose(sym);
        } else {
            spec = rank_one_update(spec, x, UpdateMode::incremental);
        }

        const double v = u + shift.delta;
        int delta_reg = 0;
        try {
            delta_reg = regularity_shift_lower(spec, v, params.eps, n);
        } catch (const barrier_violation&) {
            log_violation(k, "barrier");
            aborted = true;
            push_row(k, shift.delta, 0, "barrier");
            break;
        }
        u = v - delta_reg;
        result.regularity_total += delta_reg;
        delta_sum += shift.delta;

        if (!(u < spec.lambda_min())) {
            log_violation(k, "barrier");
            aborted = true;
            push_row(k, shift.delta, delta_reg, "barrier");
            break;
        }
        const double next_potential = stieltjes_lower(spec, u);
        if (next_potential > potential + kMonotoneSlack) {
            log_violation(k, "potential_monotonicity");
            if (note.empty()) note = "potential_monotonicity";
        }
        potential = next_potential;
        push_row(k, shift.delta, delta_reg, note);
    }

    result.barrier_final = u;
    result.final_potential = potential;
    result.mean_delta = delta_sum / m;
    if (result.regularity_total > result.regularity_budget) {
        log_violation(m, "regularity_budget");
    }

    Eigen::MatrixXd sym = accum.selfadjointView<Eigen::Lower>();
    result.lambda_min_final = eigendecompose(sym).lambda_min();
    if (!(result.barrier_final <= result.lambda_min_final)) {
        log_violation(m, "final_barrier");
    }
    const double target = (std::sqrt(static_cast<double>(m)) - std::sqrt(static_cast<double>(n)));
    result.ratio = result.barrier_final / (target * target);
    result.feasible = !aborted && result.violations.empty();
    return result;
}

}  // namespace

LowerWalkResult run_lower_walk(const SamplerModel& model, int m, const LowerWalkOptions& options) {
    LowerShiftParams params{options.eps};
    RngStream stream = model.stream();
    return run_lower_walk_impl(model.dim, m, params, options,
                               [&](int) { return sample_vector(model, stream); });
}

LowerWalkResult run_lower_walk(const SampleBatch& batch, const LowerWalkOptions& options) {
    LowerShiftParams params{options.eps};
    return run_lower_walk_impl(batch.dim(), batch.sample_count(), params, options,
                               [&](int k) { return batch.rows.row(k).transpose().eval(); });
}

void write_lower_trajectory_csv(std::ostream& os, const LowerWalkResult& result) {
    os << "k,u_k,lambda_min,potential,delta,delta_R,violation\n";
    for (const auto& row : result.trajectory) {
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%d,%.12g,%.12g,%.12g,%.12g,%d,%s\n", row.step, row.barrier,
                      row.lambda_min, row.potential, row.delta, row.delta_reg,
                      row.violation.c_str());
        os << buf;
    }
}

}  // namespace mpedge
