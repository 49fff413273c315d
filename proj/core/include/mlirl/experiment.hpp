#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mlirl/demos.hpp"
#include "mlirl/env.hpp"
#include "mlirl/io.hpp"
#include "mlirl/ml_irl.hpp"

namespace mlirl {

/// Self-describing run configuration ("experiment/v1"). Every field has a
/// serialized form; the effective config (defaults resolved, horizon derived)
/// is written back into the output directory so a run can be reproduced from
/// its artifacts alone.
struct ExperimentConfig {
    std::uint64_t master_seed = 0;

    // environment
    std::string env_kind = "gridworld";  // "gridworld" | "random"
    int rows = 5, cols = 5;
    double slip_prob = 0.1;
    int n_states = 5, n_actions = 3;
    double concentration = 1.0;
    double discount = 0.9;
    int feature_dim = 16;

    // network
    int width = 64;
    double radius = 10.0;

    // algorithm
    IrlVariant variant = IrlVariant::kSingleLoop;
    int iterations = 100;
    double alpha0 = 1.0;
    double sigma = 0.5;
    SamplingMode sampling_mode = SamplingMode::kExactStationary;
    int chain_burn_in = 100;
    int diagnostics_interval = 10;
    int checkpoint_interval = 0;  // 0: only a final checkpoint
    bool reset_inner = false;

    // dataset
    int n_trajectories = 10;
    int horizon = 0;  // 0: derive from tail_tol
    double tail_tol = 1e-3;

    std::filesystem::path output_directory = "runs/default";

    /// Horizon after applying the tail rule when unset.
    int effective_horizon() const;
    IrlConfig irl_config() const;

    void validate() const;
};

ExperimentConfig load_experiment_config(const std::filesystem::path& path);
void write_experiment_config(const std::filesystem::path& path, const ExperimentConfig& config);

/// Applies the MLIRL_OUTPUT_ROOT override (if set) to a relative path.
std::filesystem::path resolve_output_path(const std::filesystem::path& path);

/// Environment construction from the config's env substream, with the
/// mixing and feature-regularity audits attached as metadata.
EnvBundle generate_environment(const ExperimentConfig& config);

DemoDataset generate_demos(const ExperimentConfig& config, const EnvBundle& env);

/// gen-env: write the mdp/v1 document.
void cmd_gen_env(const ExperimentConfig& config, const std::filesystem::path& env_path);

/// gen-demos: write demos JSONL plus the expert sidecar.
void cmd_gen_demos(const ExperimentConfig& config, const std::filesystem::path& env_path,
                   const std::filesystem::path& demos_path,
                   const std::filesystem::path& expert_path);

struct RunOutcome {
    long iterations = 0;
    long total_td_steps = 0;
    std::filesystem::path directory;
};

/// run: execute the configured variant, flushing diagnostics incrementally
/// and checkpointing at the configured interval (plus a final checkpoint).
/// With resume set, continues from the latest checkpoint in the directory.
RunOutcome cmd_run(const ExperimentConfig& config, const std::filesystem::path& env_path,
                   const std::filesystem::path& demos_path,
                   const std::filesystem::path& expert_path,
                   const std::filesystem::path& out_dir, bool resume);

/// Independent runs over consecutive master seeds, one subdirectory each,
/// executed concurrently.
std::vector<RunOutcome> cmd_sweep(const ExperimentConfig& config,
                                  const std::filesystem::path& env_path,
                                  const std::filesystem::path& demos_path,
                                  const std::filesystem::path& expert_path,
                                  const std::filesystem::path& out_root, int n_seeds);

struct QuartileSummary {
    double first_quartile_mean = 0.0;
    double last_quartile_mean = 0.0;
};
QuartileSummary quartile_means(const std::vector<double>& values);

struct RunSummary {
    std::string directory;
    int records = 0;
    QuartileSummary policy_log_gap;
    QuartileSummary grad_norm_sq;
    double final_likelihood = 0.0;
    double final_saddle_gap = 0.0;
};
RunSummary summarize_run(const std::filesystem::path& run_dir);

/// report: aggregate summaries (mean and standard deviation across runs)
/// written as JSON, plus an optional CSV table (one row per run followed by
/// mean and std rows); never mutates the inputs.
void cmd_report(const std::vector<std::filesystem::path>& run_dirs,
                const std::filesystem::path& out_path,
                const std::filesystem::path& csv_path = {});

}  // namespace mlirl
