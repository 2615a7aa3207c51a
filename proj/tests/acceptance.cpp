// Acceptance suite: one checkable criterion per id, each printing a single
// PASS/FAIL line (WARN for the soft concentration check). The process exit
// code is the number of failed hard criteria.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mpedge/barrier_lower.hpp"
#include "mpedge/barrier_upper.hpp"
#include "mpedge/harness.hpp"
#include "mpedge/mp_law.hpp"
#include "mpedge/samplers.hpp"
#include "mpedge/spectral.hpp"
#include "mpedge/tails.hpp"

using namespace mpedge;

namespace {

using clock_type = std::chrono::steady_clock;

struct Criterion {
    bool pass = true;
    bool soft = false;  // soft criteria downgrade FAIL to WARN
    std::string detail;
};

double seconds_since(clock_type::time_point start) {
    return std::chrono::duration<double>(clock_type::now() - start).count();
}

std::string fmt(const char* pattern, ...) {
    char buf[512];
    va_list args;
    va_start(args, pattern);
    std::vsnprintf(buf, sizeof(buf), pattern, args);
    va_end(args);
    return buf;
}

struct WalkSet {
    std::vector<LowerWalkResult> lower;
    std::vector<UpperWalkResult> upper;
    double elapsed = 0.0;
};

WalkSet run_criterion_walks() {
    WalkSet set;
    const auto start = clock_type::now();
    for (int t = 0; t < 10; ++t) {
        LowerWalkOptions opt;
        opt.eps = 0.2;
        set.lower.push_back(run_lower_walk(make_gaussian(64, trial_seed(4242, t)), 4096, opt));
    }
    for (int t = 0; t < 10; ++t) {
        UpperWalkOptions opt;
        opt.eps = 0.1;
        set.upper.push_back(run_upper_walk(make_gaussian(64, trial_seed(2424, t)), 1024, opt));
    }
    set.elapsed = seconds_since(start);
    return set;
}

// 1. Every step of 10 lower and 10 upper walks keeps the barrier strictly
//    on its side of the spectrum, with zero violations, within 2 minutes.
Criterion criterion_1() {
    const WalkSet set = run_criterion_walks();
    Criterion c;
    int bad_steps = 0;
    std::size_t violations = 0;
    for (const auto& r : set.lower) {
        violations += r.violations.size();
        for (const auto& row : r.trajectory) bad_steps += !(row.barrier < row.lambda_min);
        bad_steps += !(r.barrier_final <= r.lambda_min_final);
    }
    for (const auto& r : set.upper) {
        violations += r.violations.size();
        for (const auto& row : r.trajectory) bad_steps += !(row.lambda_max < row.barrier);
        bad_steps += !(r.barrier_final > r.lambda_max_final);
    }
    c.pass = bad_steps == 0 && violations == 0 && set.elapsed <= 120.0;
    c.detail = fmt("bad_steps=%d violations=%zu elapsed=%.1fs (cap 120s)", bad_steps, violations,
                   set.elapsed);
    return c;
}

// 2. Both potentials are non-increasing along every walk (slack 1e-9).
Criterion criterion_2() {
    const WalkSet set = run_criterion_walks();
    Criterion c;
    int regressions = 0;
    double worst = 0.0;
    for (const auto& r : set.lower) {
        for (std::size_t k = 1; k < r.trajectory.size(); ++k) {
            const double jump = r.trajectory[k].potential - r.trajectory[k - 1].potential;
            worst = std::max(worst, jump);
            regressions += jump > 1e-9;
        }
    }
    for (const auto& r : set.upper) {
        for (std::size_t k = 1; k < r.trajectory.size(); ++k) {
            const double jump = r.trajectory[k].potential - r.trajectory[k - 1].potential;
            worst = std::max(worst, jump);
            regressions += jump > 1e-9;
        }
    }
    c.pass = regressions == 0;
    c.detail = fmt("regressions=%d worst_jump=%.3g (slack 1e-9)", regressions, worst);
    return c;
}

// 3. Regularity budgets hold exactly: sum deltaR <= eps n^2/(sqrt(mn)-n)
//    (lower) and sum DeltaR <= 2 eps n (upper).
Criterion criterion_3() {
    const WalkSet set = run_criterion_walks();
    Criterion c;
    int busts = 0;
    double worst_frac = 0.0;
    for (const auto& r : set.lower) {
        busts += r.regularity_total > r.regularity_budget;
        worst_frac = std::max(worst_frac, r.regularity_total / r.regularity_budget);
    }
    for (const auto& r : set.upper) {
        busts += r.regularity_total > r.regularity_budget;
        worst_frac = std::max(worst_frac, r.regularity_total / r.regularity_budget);
    }
    c.pass = busts == 0;
    c.detail = fmt("busts=%d worst_budget_fraction=%.3g", busts, worst_frac);
    return c;
}

// 4. Edge convergence at rho = 1/9: gaussian and rademacher means land
//    within 0.03 of (1 -+ sqrt(rho))^2 across 20 trials, within a minute.
Criterion criterion_4() {
    const auto start = clock_type::now();
    Criterion c;
    c.detail = "";
    for (const char* family : {"gaussian", "rademacher"}) {
        const SamplerModel model = parse_model(family, 256, 0);
        const EdgeResult res = edges_mc(model, 2304, 20, 777, 0);
        const bool ok = res.err_min <= 0.03 && res.err_max <= 0.03;
        c.pass = c.pass && ok;
        c.detail += fmt("%s: |min-4/9|=%.4f |max-16/9|=%.4f ", family, res.err_min, res.err_max);
    }
    const double elapsed = seconds_since(start);
    c.pass = c.pass && elapsed <= 60.0;
    c.detail += fmt("elapsed=%.1fs (cap 60s)", elapsed);
    return c;
}

// 5. Heavy tails break the upper edge but not the lower one: student_t(3)
//    pushes mean lambda_max above 1.5 * 16/9 while the smallest eigenvalue
//    stays within 0.05 of 4/9.
Criterion criterion_5() {
    Criterion c;
    const SamplerModel model = make_student_t(256, 3.0, 0);
    const EdgeResult res = edges_mc(model, 2304, 20, 778, 0);
    const double cap = 1.5 * (16.0 / 9.0);
    c.pass = res.mean_max >= cap && res.err_min <= 0.05;
    c.detail = fmt("mean_max=%.3f (need >= %.3f) |min-4/9|=%.4f (cap 0.05)", res.mean_max, cap,
                   res.err_min);
    return c;
}

// 6. Tail-projection suite: light-tailed families pass every (r, t) cell
//    with g(r) = 10/sqrt(r); symmetric pareto a=3 fails at r=256.
Criterion criterion_6() {
    Criterion c;
    const std::vector<int> ranks{64, 256};
    const std::vector<double> factors{0.5, 1.0, 2.0};
    const TailFunctions tails = TailFunctions::defaults();
    const int trials = 100000;
    for (const char* family : {"gaussian", "rademacher", "laplace"}) {
        const TailReport rep =
            check_stp(parse_model(family, 512, 31337), ranks, factors, trials, tails);
        int fails = 0;
        for (const auto& cell : rep.cells) fails += !cell.pass;
        c.pass = c.pass && fails == 0;
        c.detail += fmt("%s_fails=%d ", family, fails);
    }
    const TailReport pareto =
        check_stp(make_symmetric_pareto(512, 3.0, 31337), ranks, factors, trials, tails);
    int heavy_fails_256 = 0;
    for (const auto& cell : pareto.cells) heavy_fails_256 += (cell.r == 256 && !cell.pass);
    c.pass = c.pass && heavy_fails_256 >= 1;
    c.detail += fmt("pareto_fails_at_256=%d (need >= 1)", heavy_fails_256);
    return c;
}

// 7. Decoupling moment facts: E<X,P0 X>^2 <= 64 r and the r^{3/4} tail
//    frequency <= 64/sqrt(r), with 3 sigma slack.
Criterion criterion_7() {
    Criterion c;
    const SamplerModel model = make_rademacher(128, 909);
    const ProjectionSpec proj = random_projection(128, 32, 910);
    const DecouplingReport rep = decoupled_moment_check(model, proj, 10000);
    c.pass = rep.pass_second && rep.pass_tail;
    c.detail = fmt("EQ2=%.2f (bound %.0f) tail=%.4f (bound %.2f)", rep.second_moment,
                   rep.second_moment_bound, rep.tail_freq, rep.tail_bound);
    return c;
}

// 8. Dual-route spectral identities: the rank-one trace formula matches a
//    dense inverse to 1e-10 relative on 100 triples, and the incremental
//    eigen-update matches full re-decomposition to 1e-8 at n = 32.
Criterion criterion_8() {
    Criterion c;
    double worst_trace = 0.0;
    RngStream stream(5150);
    for (int rep = 0; rep < 100; ++rep) {
        const int n = 16;
        Eigen::MatrixXd b(n, 2 * n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < 2 * n; ++j) b(i, j) = stream.next_gaussian();
        }
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
        a.selfadjointView<Eigen::Lower>().rankUpdate(b);
        Eigen::MatrixXd sym = a.selfadjointView<Eigen::Lower>();
        const SymmetricSpectrum spec = eigendecompose(sym);
        Eigen::VectorXd xvec(n);
        for (int i = 0; i < n; ++i) xvec(i) = stream.next_gaussian();
        const RankOneVector x = project_onto(spec, xvec);
        const double u = (rep % 2 == 0)
                             ? spec.lambda_min() - 0.5 - stream.next_double()
                             : spec.lambda_max() + xvec.squaredNorm() + 0.5 + stream.next_double();

        Eigen::MatrixXd shifted = sym + xvec * xvec.transpose();
        shifted.diagonal().array() -= u;
        const double direct = shifted.partialPivLu().inverse().trace();
        const double formula = sherman_morrison_trace(spec, x, u);
        worst_trace = std::max(worst_trace,
                               std::abs(formula - direct) / std::max(std::abs(direct), 1e-12));
    }

    double worst_eig = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        const int n = 32;
        Eigen::MatrixXd b(n, n + 8);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n + 8; ++j) b(i, j) = stream.next_gaussian();
        }
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
        a.selfadjointView<Eigen::Lower>().rankUpdate(b);
        Eigen::MatrixXd sym = a.selfadjointView<Eigen::Lower>();
        const SymmetricSpectrum spec = eigendecompose(sym);
        Eigen::VectorXd xvec(n);
        for (int i = 0; i < n; ++i) xvec(i) = stream.next_gaussian();
        const RankOneVector x = project_onto(spec, xvec);
        const SymmetricSpectrum full = rank_one_update(spec, x, UpdateMode::full);
        const SymmetricSpectrum inc = rank_one_update(spec, x, UpdateMode::incremental);
        worst_eig = std::max(worst_eig,
                             (full.eigenvalues - inc.eigenvalues).cwiseAbs().maxCoeff());
    }
    c.pass = worst_trace <= 1e-10 && worst_eig <= 1e-8;
    c.detail = fmt("worst_trace_rel=%.2e (cap 1e-10) worst_eig_abs=%.2e (cap 1e-8)", worst_trace,
                   worst_eig);
    return c;
}

// 9. The closed-form alpha satisfies its defining inequality on a 1000-point
//    grid and stops being feasible after a 1e-4 relative bump.
Criterion criterion_9() {
    Criterion c;
    const std::pair<double, double> pairs[] = {{1.0, 0.05}, {4.0, 0.1}, {9.0, 0.0625}};
    for (const auto& [gamma, eps] : pairs) {
        const double alpha = select_alpha(gamma, eps);
        const double tstar = 1.0 / (1.0 + std::sqrt(gamma));
        bool holds = true, bumped_fails = false;
        for (int i = 1; i <= 1000; ++i) {
            const double t = tstar * i / 1000.0;
            const double rhs = (1.0 + eps) / (1.0 - t);
            if ((1.0 + alpha) / (1.0 - t - alpha) > rhs * (1.0 + 1e-12)) holds = false;
            const double bigger = alpha * 1.0001;
            if ((1.0 + bigger) / (1.0 - t - bigger) > rhs) bumped_fails = true;
        }
        c.pass = c.pass && holds && bumped_fails;
        c.detail += fmt("(g=%g,e=%g): a=%.6f holds=%d maximal=%d ", gamma, eps, alpha, holds,
                        bumped_fails);
    }
    return c;
}

// 10. The law itself: a 1000x4000 gaussian spectrum sits within KS 0.05 of
//     mu_rho, and the density integrates to 1 - atom for three ratios.
Criterion criterion_10() {
    Criterion c;
    const SymmetricSpectrum spec =
        eigendecompose(empirical_covariance(sample_batch(make_gaussian(1000, 424242), 4000)));
    std::vector<double> eigs(spec.eigenvalues.data(), spec.eigenvalues.data() + spec.dim);
    const double ks = ks_distance(make_esd(std::move(eigs), 4000), MPParams(0.25));

    double worst_integral = 0.0;
    for (double rho : {0.25, 1.0, 4.0}) {
        const MPParams mp(rho);
        worst_integral = std::max(worst_integral,
                                  std::abs(mp_continuous_integral(mp) - mp.continuous_mass()));
    }
    c.pass = ks <= 0.05 && worst_integral <= 1e-6;
    c.detail = fmt("ks=%.4f (cap 0.05) worst_integral_err=%.2e (cap 1e-6)", ks, worst_integral);
    return c;
}

// 11. Soft concentration check at the largest desk-scale size: the frequency
//     of {q1(1/eps) + 1 >= (1+eps)(1+m)} along an n=512 walk stays within
//     4 eps^2 + 3 stderr. The concentration regime wants n >= 12/eps^4,
//     marginal here, so an overrun downgrades to a warning.
Criterion criterion_11() {
    Criterion c;
    c.soft = true;
    LowerWalkOptions opt;
    opt.eps = 0.3;
    opt.keep_trajectory = false;
    const LowerWalkResult res = run_lower_walk(make_gaussian(512, 51211), 8192, opt);
    if (!res.feasible) {
        c.soft = false;  // the walk itself must stay feasible
        c.pass = false;
        c.detail = "walk infeasible";
        return c;
    }
    const double freq =
        res.concentration_samples > 0
            ? static_cast<double>(res.concentration_events) / res.concentration_samples
            : 0.0;
    const double stderr_freq = std::sqrt(std::max(freq * (1.0 - freq), 0.0) /
                                         std::max(res.concentration_samples, 1));
    const double bound = 4.0 * opt.eps * opt.eps + 3.0 * stderr_freq;
    c.pass = freq <= bound;
    c.detail = fmt("freq=%.5f bound=%.5f events=%d/%d ratio=%.3f", freq, bound,
                   res.concentration_events, res.concentration_samples, res.ratio);
    return c;
}

const char* kNames[] = {
    "barrier feasibility (10 lower + 10 upper walks)",
    "potential monotonicity along every walk",
    "regularity shift budgets",
    "edge convergence at rho = 1/9",
    "heavy-tail breakdown of the upper edge",
    "strong tail projection suite",
    "decoupling moment facts",
    "rank-one trace and eigen-update oracles",
    "alpha selection oracle",
    "Marchenko-Pastur distance and mass",
    "concentration frequency (soft)",
};

int run_one(int id) {
    Criterion c;
    switch (id) {
        case 1: c = criterion_1(); break;
        case 2: c = criterion_2(); break;
        case 3: c = criterion_3(); break;
        case 4: c = criterion_4(); break;
        case 5: c = criterion_5(); break;
        case 6: c = criterion_6(); break;
        case 7: c = criterion_7(); break;
        case 8: c = criterion_8(); break;
        case 9: c = criterion_9(); break;
        case 10: c = criterion_10(); break;
        case 11: c = criterion_11(); break;
        default: std::fprintf(stderr, "unknown criterion %d\n", id); return 1;
    }
    const char* verdict = c.pass ? "PASS" : (c.soft ? "WARN" : "FAIL");
    std::printf("[%s] criterion %2d, %s: %s\n", verdict, id, kNames[id - 1], c.detail.c_str());
    std::fflush(stdout);
    return (!c.pass && !c.soft) ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    int failures = 0;
    if (argc > 1) {
        for (int i = 1; i < argc; ++i) failures += run_one(std::atoi(argv[i]));
    } else {
        for (int id = 1; id <= 11; ++id) failures += run_one(id);
    }
    return failures;
}
