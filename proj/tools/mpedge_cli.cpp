// Command-line front end for the covariance spectrum-edge experiments:
// Monte Carlo edge estimates, the two barrier walks, tail-projection and
// decoupling reports, and comparison of empirical spectra against the
// Marchenko-Pastur law.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>

#include "mpedge/harness.hpp"

namespace {

void add_common_options(CLI::App* sub, mpedge::ExperimentConfig& cfg) {
    sub->add_option("--model", cfg.model,
                    "sampler family: gaussian | rademacher | student_t(nu) | pareto(a) | "
                    "laplace | uniform_ball | zero");
    sub->add_option("--n", cfg.n, "ambient dimension");
    sub->add_option("--m", cfg.m, "sample count (omit to derive from --rho)");
    sub->add_option("--rho", cfg.rho, "aspect ratio n/m (used when --m is omitted)");
    sub->add_option("--eps", cfg.eps, "walk accuracy parameter");
    sub->add_option("--trials", cfg.trials, "independent trials");
    sub->add_option("--seed", cfg.seed, "master seed");
    sub->add_option("--out", cfg.out, "output path prefix");
    sub->add_option("--format", cfg.format, "table format: csv | json");
    sub->add_option("--threads", cfg.threads, "trial parallelism (0 = all cores)");
    sub->add_option("--config", "flat key=value config file (flags take precedence)")
        ->expected(1);
}

// The config file seeds the defaults before CLI11 applies any flags, so
// explicit flags always win.
bool preload_config(int argc, char** argv, mpedge::ExperimentConfig& cfg) {
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--config" && i + 1 < argc) {
            mpedge::apply_config_file(argv[i + 1], cfg);
            return true;
        }
        if (arg.rfind("--config=", 0) == 0) {
            mpedge::apply_config_file(arg.substr(9), cfg);
            return true;
        }
    }
    return false;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"empirical covariance spectrum-edge experiments"};
    app.require_subcommand(1);

    std::vector<std::pair<mpedge::ExperimentKind, CLI::App*>> subs;
    mpedge::ExperimentConfig cfg;

    try {
        preload_config(argc, argv, cfg);
    } catch (const std::exception& err) {
        std::fprintf(stderr, "config error: %s\n", err.what());
        return 1;
    }

    auto* edges = app.add_subcommand("edges-mc", "Monte Carlo extreme eigenvalues of the "
                                                 "empirical covariance");
    subs.emplace_back(mpedge::ExperimentKind::edges_mc, edges);

    auto* wl = app.add_subcommand("walk-lower", "barrier walk certifying a lower bound on "
                                                "the smallest eigenvalue");
    subs.emplace_back(mpedge::ExperimentKind::walk_lower, wl);

    auto* wu = app.add_subcommand("walk-upper", "barrier walk certifying an upper bound on "
                                                "the largest eigenvalue");
    subs.emplace_back(mpedge::ExperimentKind::walk_upper, wu);

    auto* stp = app.add_subcommand("tail-stp", "tail-projection probability grid vs the "
                                               "g(r) r / t^2 bound");
    stp->add_option("--ranks", cfg.ranks, "comma-separated projection ranks");
    stp->add_option("--t-factors", cfg.t_factors, "thresholds as multiples of the rank");
    subs.emplace_back(mpedge::ExperimentKind::tail_stp, stp);

    auto* wtpa = app.add_subcommand("tail-wtpa", "uniform-integrability sup estimates of "
                                                 "truncated directional second moments");
    wtpa->add_option("--m-levels", cfg.m_levels, "comma-separated truncation levels");
    subs.emplace_back(mpedge::ExperimentKind::tail_wtpa, wtpa);

    auto* dec = app.add_subcommand("decoupling", "moment facts for the hollowed quadratic "
                                                 "form <X, P0 X>");
    dec->add_option("--rank", cfg.rank, "projection rank");
    subs.emplace_back(mpedge::ExperimentKind::decoupling, dec);

    auto* mpc = app.add_subcommand("mp-compare", "KS distance between one empirical spectrum "
                                                 "and the Marchenko-Pastur law");
    subs.emplace_back(mpedge::ExperimentKind::mp_compare, mpc);

    for (auto& [kind, sub] : subs) add_common_options(sub, cfg);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    for (auto& [kind, sub] : subs) {
        if (sub->parsed()) cfg.kind = kind;
    }

    try {
        const mpedge::ExperimentOutcome outcome = mpedge::run_experiment(cfg);
        std::printf("%s\n", outcome.summary.c_str());
        for (const auto& f : outcome.files_written) std::printf("wrote %s\n", f.c_str());
        return outcome.exit_code;
    } catch (const std::exception& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return 2;
    }
}
