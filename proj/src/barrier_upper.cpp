#include "mpedge/barrier_upper.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <stdexcept>

namespace mpedge {

namespace {

constexpr double kMonotoneSlack = 1e-9;

void require_above(const SymmetricSpectrum& spec, double u, const char* where) {
    if (!(u > spec.lambda_max())) {
        throw barrier_violation(std::string(where) + ": u <= lambda_max");
    }
}

double upper_potential_difference(const SymmetricSpectrum& spec, double v, int l) {
    double acc = 0.0;
    for (int i = 0; i < spec.dim; ++i) {
        const double gap = v + l - spec.eigenvalues(i);
        acc += 1.0 / (gap * (gap + 1.0));
    }
    return acc;
}

}  // namespace

double upper_q1(const SymmetricSpectrum& spec, const RankOneVector& x, double u, double delta) {
    require_above(spec, u, "Q1");
    if (delta < 0.0) throw std::invalid_argument("Q1 requires Delta >= 0");
    double acc = 0.0;
    for (int i = 0; i < spec.dim; ++i) {
        const double p = x.projections(i);
        acc += p * p / (u + delta - spec.eigenvalues(i));
    }
    return acc;
}

double upper_q2(const SymmetricSpectrum& spec, const RankOneVector& x, double u, double delta) {
    require_above(spec, u, "Q2");
    if (!(delta > 0.0)) throw std::invalid_argument("Q2 requires Delta > 0");
    double num = 0.0, den = 0.0;
    for (int i = 0; i < spec.dim; ++i) {
        const double g0 = u - spec.eigenvalues(i);
        const double g1 = g0 + delta;
        const double p = x.projections(i);
        num += p * p / (g1 * g1);
        den += delta / (g0 * g1);  // m(u) - m(u+delta), term by term
    }
    return num / den;
}

double upper_f2(const SymmetricSpectrum& spec, const RankOneVector& x, double u, double delta) {
    require_above(spec, u, "F2");
    if (delta < 0.0) throw std::invalid_argument("F2 requires Delta >= 0");
    double num = 0.0, den = 0.0;
    for (int i = 0; i < spec.dim; ++i) {
        const double g0 = u - spec.eigenvalues(i);
        const double g1 = g0 + delta;
        const double p = x.projections(i);
        num += p * p / (g1 * g1);
        den += 1.0 / (g0 * g1);
    }
    return num / den;
}

LevelSets level_sets(const SymmetricSpectrum& spec, double u) {
    require_above(spec, u, "level_sets");
    LevelSets out;
    for (int i = 0; i < spec.dim; ++i) {
        const double gap = u - spec.eigenvalues(i);
        if (gap < 1.0) {
            out.residual.push_back(i);
            continue;
        }
        int j = 1;
        double bound = 4.0;  // exact powers of 4, so the half-open bins are exact
        while (gap >= bound) {
            bound *= 4.0;
            ++j;
        }
        if (out.bin_count() < j) out.bins.resize(j);
        out.bins[j - 1].push_back(i);
    }
    double ratio16 = 1.0;
    for (int j = 1; j <= out.bin_count(); ++j) {
        ratio16 /= 16.0;
        out.max_ratio16 = std::max(out.max_ratio16, out.bins[j - 1].size() * ratio16);
    }
    return out;
}

std::vector<double> h_excess(const LevelSets& levels, const RankOneVector& x) {
    std::vector<double> h(levels.bins.size(), 0.0);
    for (std::size_t j = 0; j < levels.bins.size(); ++j) {
        double acc = 0.0;
        for (int i : levels.bins[j]) {
            const double p = x.projections(i);
            acc += p * p;
        }
        h[j] = acc - static_cast<double>(levels.bins[j].size());
    }
    return h;
}

double select_alpha(double gamma, double eps) {
    if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("eps must be in (0, 1)");
    const double tstar = 1.0 / (1.0 + std::sqrt(gamma));
    return eps * (1.0 - tstar) / (2.0 + eps - tstar);
}

Delta1Result shift_delta1(const SymmetricSpectrum& spec, const RankOneVector& x, double u,
                          double eps) {
    require_above(spec, u, "shift_delta1");
    if (!(eps > 0.0 && eps <= 0.25)) throw std::invalid_argument("eps must be in (0, 1/4]");
    const int n = spec.dim;

    Delta1Result out;
    out.levels = level_sets(spec, u);
    out.h = h_excess(out.levels, x);

    const double norm2 = x.squared_norm();
    if (eps * norm2 >= static_cast<double>(n)) out.delta1 += norm2 / std::sqrt(eps);

    // the 1e-12 nudge keeps exact powers of 4 from flooring one bin short
    const int j_cut =
        static_cast<int>(std::floor(std::log(n / (eps * eps)) / std::log(4.0) + 1e-12));
    const int j_top = std::min(j_cut, out.levels.bin_count());
    for (int j = 1; j <= j_top; ++j) {
        const auto& bin = out.levels.bins[j - 1];
        if (bin.empty()) continue;
        const double hj = out.h[j - 1];
        if (hj > eps * eps * std::ldexp(1.0, j) * std::sqrt(static_cast<double>(bin.size()))) {
            out.delta1 += hj / eps;
        }
    }

    if (out.levels.residual.empty()) {
        const double lhs = upper_q1(spec, x, u, out.delta1);
        const double rhs = stieltjes_upper(spec, u + out.delta1) + 6.0 * std::sqrt(eps) +
                           8.0 * eps * std::sqrt(n * out.levels.max_ratio16);
        out.conclusion_slack = rhs - lhs;
        out.conclusion_checked = true;
    }
    return out;
}

double shift_delta2(const SymmetricSpectrum& spec, const RankOneVector& x, double u, double alpha) {
    require_above(spec, u, "shift_delta2");
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
    const double mbar = stieltjes_upper(spec, u);
    const double slack = 1.0 - mbar - alpha;
    if (!(slack > 0.0)) {
        throw numeric_precondition_error("shift_delta2: m(u) + alpha >= 1");
    }
    const double f20 = upper_f2(spec, x, u, 0.0);
    const double top_gap = u - spec.lambda_max();
    if ((1.0 + alpha) * f20 <= alpha * top_gap * slack) {
        return (1.0 + alpha) * f20 / slack;
    }
    for (int j = 0; j <= 64; ++j) {
        const double delta = std::ldexp(top_gap, j);
        if (upper_q2(spec, x, u, delta) <= slack) return delta;
    }
    throw std::runtime_error("shift_delta2: doubling search failed to terminate");
}

int regularity_shift_upper(const SymmetricSpectrum& updated, double v, double eps, int n) {
    if (!(v > updated.lambda_max())) {
        throw barrier_violation("regularity_shift_upper: v <= lambda_max");
    }
    const double threshold = 1.0 / (2.0 * eps * n);
    const int cap = static_cast<int>(std::ceil(n * std::sqrt(2.0 * eps))) + 2;
    for (int l = 0; l <= cap; ++l) {
        if (upper_potential_difference(updated, v, l) <= threshold) return l;
    }
    throw std::runtime_error("regularity_shift_upper: scan exceeded its deterministic cap");
}

double estimate_moment_bound(const SamplerModel& model, int trials) {
    if (model.family == Family::gaussian) return 2.0 * std::sqrt(2.0 / M_PI);
    if (model.family == Family::zero_stub) return 1.0;
    const int n = model.dim;
    std::vector<Eigen::VectorXd> directions;
    directions.push_back(Eigen::VectorXd::Unit(n, 0));
    directions.push_back(Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(double(n))));
    RngStream dir_stream = model.stream().split(0x3d);
    for (int d = 0; d < 3; ++d) {
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) y(i) = dir_stream.next_gaussian();
        y.normalize();
        directions.push_back(y);
    }
    RngStream stream = model.stream().split(0x3e);
    double best = 1.0;
    Eigen::VectorXd sums = Eigen::VectorXd::Zero(static_cast<int>(directions.size()));
    for (int k = 0; k < trials; ++k) {
        const Eigen::VectorXd x = sample_vector(model, stream);
        for (std::size_t d = 0; d < directions.size(); ++d) {
            const double v = std::abs(directions[d].dot(x));
            sums(static_cast<int>(d)) += v * v * v;
        }
    }
    best = std::max(best, sums.maxCoeff() / trials);
    return best;
}

namespace {

UpperWalkResult run_upper_walk_impl(int n, int m, const UpperWalkOptions& options,
                                    const std::function<Eigen::VectorXd(int)>& draw) {
    if (m < 1) throw std::invalid_argument("upper walk requires m >= 1");
    if (!(options.eps > 0.0 && options.eps <= 0.25)) {
        throw std::invalid_argument("eps must be in (0, 1/4]");
    }
    const double eps = options.eps;
    const double gamma = static_cast<double>(m) / n;
    const double alpha = options.alpha ? *options.alpha : select_alpha(gamma, eps);
    const double alpha_cap = std::sqrt(gamma) / (1.0 + std::sqrt(gamma));
    if (!(alpha > 0.0 && alpha < alpha_cap)) {
        throw std::invalid_argument("alpha outside (0, sqrt(gamma)/(1+sqrt(gamma)))");
    }

    UpperWalkResult result;
    result.n = n;
    result.m = m;
    result.eps = eps;
    result.alpha = alpha;
    result.params = UpperShiftParams{eps, alpha, options.kappa,
                                     options.moment_bound.value_or(1.0)};
    result.regularity_budget = 2.0 * eps * n;

    Eigen::MatrixXd accum = Eigen::MatrixXd::Zero(n, n);
    SymmetricSpectrum spec;
    spec.dim = n;
    spec.eigenvalues = Eigen::VectorXd::Zero(n);
    spec.eigenvectors = Eigen::MatrixXd::Identity(n, n);

    double u = n + std::sqrt(static_cast<double>(m) * n);
    double potential = stieltjes_upper(spec, u);
    result.initial_potential = potential;

    auto log_violation = [&](int step, const char* reason) {
        result.violations.push_back({step, reason});
    };
    auto push_row = [&](int step, double d1, double d2, int dreg, double ratio,
                        const std::string& note) {
        if (!options.keep_trajectory) return;
        result.trajectory.push_back({step, u, spec.lambda_max(), potential, d1, d2, dreg,
                                     result.regularity_total, ratio, note});
    };
    push_row(0, 0.0, 0.0, 0, 0.0, "");

    double d1_sum = 0.0, d2_sum = 0.0;
    bool aborted = false;
    for (int k = 1; k <= m && !aborted; ++k) {
        const Eigen::VectorXd sample = draw(k - 1);
        const RankOneVector x = project_onto(spec, sample);
        std::string note;

        if (!(potential + alpha < 1.0)) {
            log_violation(k, "alpha_budget");
            aborted = true;
            break;
        }

        const Delta1Result d1 = shift_delta1(spec, x, u, eps);
        if (!d1.levels.residual.empty()) {
            result.warnings.push_back({k, "residual_level_set"});
        }
        if (d1.conclusion_checked && d1.conclusion_slack < -kMonotoneSlack) {
            log_violation(k, "delta1_conclusion");
            note = "delta1_conclusion";
        }
        // small total level-set mass caps each bin's ratio
        if (d1.levels.max_ratio16 <= 1.0 / (eps * n)) {
            double pow4 = 1.0;
            for (int j = 1; j <= d1.levels.bin_count(); ++j) {
                pow4 *= 4.0;
                const double size = static_cast<double>(d1.levels.bins[j - 1].size());
                if (size == 0.0) continue;
                if (size / pow4 > std::sqrt(size / (eps * n)) * (1.0 + 1e-12)) {
                    log_violation(k, "level_set_ratio");
                    note = "level_set_ratio";
                    break;
                }
            }
        }

        const double d2 = shift_delta2(spec, x, u, alpha);
        if (d2 > 0.0) {
            const double q2_at = upper_q2(spec, x, u, d2);
            if (q2_at > 1.0 - potential - alpha + kMonotoneSlack) {
                log_violation(k, "delta2_certificate");
                note = "delta2_certificate";
            }
        }
        const double step_shift = d1.delta1 + d2;
        if (step_shift > 0.0) {
            const double cq1 = upper_q1(spec, x, u, step_shift);
            const bool composed_ok =
                cq1 < 1.0 && upper_q2(spec, x, u, step_shift) <= 1.0 - cq1 + kMonotoneSlack;
            if (!composed_ok) result.warnings.push_back({k, "composed_certificate"});
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

        const double v = u + step_shift;
        int delta_reg = 0;
        try {
            delta_reg = regularity_shift_upper(spec, v, eps, n);
        } catch (const barrier_violation&) {
            log_violation(k, "barrier");
            aborted = true;
            push_row(k, d1.delta1, d2, 0, d1.levels.max_ratio16, "barrier");
            break;
        }
        u = v + delta_reg;
        result.regularity_total += delta_reg;
        d1_sum += d1.delta1;
        d2_sum += d2;

        if (!(spec.lambda_max() < u)) {
            log_violation(k, "barrier");
            aborted = true;
            push_row(k, d1.delta1, d2, delta_reg, d1.levels.max_ratio16, "barrier");
            break;
        }
        const double next_potential = stieltjes_upper(spec, u);
        if (next_potential > potential + kMonotoneSlack) {
            log_violation(k, "potential_monotonicity");
            if (note.empty()) note = "potential_monotonicity";
        }
        potential = next_potential;
        push_row(k, d1.delta1, d2, delta_reg, d1.levels.max_ratio16, note);
    }

    result.barrier_final = u;
    result.final_potential = potential;
    result.mean_delta1 = d1_sum / m;
    result.mean_delta2 = d2_sum / m;
    if (result.regularity_total > result.regularity_budget) {
        log_violation(m, "regularity_budget");
    }

    Eigen::MatrixXd sym = accum.selfadjointView<Eigen::Lower>();
    result.lambda_max_final = eigendecompose(sym).lambda_max();
    if (!(result.barrier_final > result.lambda_max_final)) {
        log_violation(m, "final_barrier");
    }
    const double target = (std::sqrt(static_cast<double>(m)) + std::sqrt(static_cast<double>(n)));
    result.ratio = result.barrier_final / (target * target);
    result.feasible = !aborted && result.violations.empty();
    return result;
}

}  // namespace

UpperWalkResult run_upper_walk(const SamplerModel& model, int m, const UpperWalkOptions& options) {
    RngStream stream = model.stream();
    UpperWalkResult result = run_upper_walk_impl(
        model.dim, m, options, [&](int) { return sample_vector(model, stream); });
    if (!options.moment_bound) {
        result.params.moment_bound = estimate_moment_bound(model);
    }
    return result;
}

UpperWalkResult run_upper_walk(const SampleBatch& batch, const UpperWalkOptions& options) {
    return run_upper_walk_impl(batch.dim(), batch.sample_count(), options,
                               [&](int k) { return batch.rows.row(k).transpose().eval(); });
}

void write_upper_trajectory_csv(std::ostream& os, const UpperWalkResult& result) {
    os << "k,u_k,lambda_max,potential,Delta1,Delta2,Delta_R,max_level_ratio,violations\n";
    for (const auto& row : result.trajectory) {
        char buf[320];
        std::snprintf(buf, sizeof(buf), "%d,%.12g,%.12g,%.12g,%.12g,%.12g,%d,%.12g,%s\n", row.step,
                      row.barrier, row.lambda_max, row.potential, row.delta1, row.delta2,
                      row.delta_reg, row.max_level_ratio, row.violation.c_str());
        os << buf;
    }
}

}  // namespace mpedge
