#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "mpedge/samplers.hpp"

namespace mpedge {

enum class ExperimentKind {
    edges_mc,
    walk_lower,
    walk_upper,
    tail_stp,
    tail_wtpa,
    decoupling,
    mp_compare,
};

ExperimentKind parse_experiment_kind(const std::string& name);
std::string experiment_kind_name(ExperimentKind kind);

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::edges_mc;
    std::string model = "gaussian";
    int n = 64;
    int m = 0;         // 0: derive from rho
    double rho = 0.0;  // used when m == 0
    double eps = 0.2;
    int trials = 1;
    std::uint64_t seed = 1;
    std::string out = "mpedge_out";
    std::string format = "csv";  // csv | json
    int threads = 0;             // 0: all hardware threads
    int rank = 32;               // decoupling projection rank
    std::string ranks = "64,256";          // tail-stp rank grid
    std::string t_factors = "0.5,1,2";     // tail-stp thresholds, multiples of r
    std::string m_levels = "0,1,4,9,16,25";  // tail-wtpa truncation grid

    int resolved_m() const;
    SamplerModel make_model() const;  // seeded with `seed`
    void validate() const;

    std::map<std::string, std::string> to_kv() const;
    std::string canonical_text() const;  // sorted key=value lines
};

struct ExperimentOutcome {
    int exit_code = 0;  // 0 ok, 1 config error, 2 invariant violation
    std::string summary;
    std::vector<std::string> files_written;
};

// Runs the experiment, writes <out>.csv (or .json) plus <out>.meta.json, and
// reports the exit-code contract result. Outputs are byte-identical for
// identical configs.
ExperimentOutcome run_experiment(const ExperimentConfig& config);

struct EdgeResult {
    std::vector<double> lambda_min;  // of the empirical covariance, per trial
    std::vector<double> lambda_max;
    double mean_min = 0, mean_max = 0;
    double std_min = 0, std_max = 0;
    double target_min = 0, target_max = 0;  // (1 -+ sqrt(rho))^2
    double err_min = 0, err_max = 0;        // |mean - target|
    double rel_err_min = 0, rel_err_max = 0;
    bool invariants_ok = true;              // per trial: 0 <= lambda_min <= lambda_max
};

EdgeResult edges_mc(const SamplerModel& model, int m, int trials, std::uint64_t master_seed,
                    int threads);

struct ConvergenceRow {
    int n = 0, m = 0;
    double mean_lower_ratio = 0;  // lambda_min(A) / (sqrt m - sqrt n)^2
    double mean_upper_ratio = 0;  // lambda_max(A) / (sqrt m + sqrt n)^2
    bool lower_defined = true;    // false when (sqrt m - sqrt n)^2 == 0
};

// Normalized edge ratios of the Gram matrix along an n grid with
// m = round(n / rho).
std::vector<ConvergenceRow> convergence_table(const SamplerModel& family, double rho,
                                              const std::vector<int>& n_grid, int trials,
                                              std::uint64_t master_seed, int threads);

// Derived per-trial seed; independent of thread scheduling.
std::uint64_t trial_seed(std::uint64_t master_seed, int trial);

// Git-style content hash: sha1 over "blob <len>\0<content>".
std::string git_blob_sha1(const std::string& content);

int hardware_threads();

// Runs fn(t) for t in [0, count) across up to `threads` workers; results
// land in trial-index order regardless of scheduling.
void parallel_trials(int count, int threads, const std::function<void(int)>& fn);

std::vector<double> parse_double_list(const std::string& text);
std::vector<int> parse_int_list(const std::string& text);

// Loads a flat key=value file ('#' comments allowed) over the config;
// command-line flags applied afterwards take precedence.
void apply_config_file(const std::string& path, ExperimentConfig& config);

}  // namespace mpedge
