// Command-line front end: environment generation, expert demos, algorithm
// runs (single run or seed sweep), and report aggregation.

#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mlirl/errors.hpp"
#include "mlirl/experiment.hpp"

namespace fs = std::filesystem;

namespace {

// Config-field overrides applied on top of the loaded TOML; flags mirror
// the experiment config fields.
struct Overrides {
    std::optional<std::uint64_t> master_seed;
    std::optional<std::string> env_kind;
    std::optional<int> rows, cols;
    std::optional<double> slip_prob;
    std::optional<int> n_states, n_actions;
    std::optional<double> concentration, discount;
    std::optional<int> feature_dim, width;
    std::optional<double> radius;
    std::optional<std::string> variant;
    std::optional<int> iterations;
    std::optional<double> alpha0, sigma;
    std::optional<std::string> sampling_mode;
    std::optional<int> chain_burn_in, diagnostics_interval, checkpoint_interval;
    std::optional<bool> reset_inner;
    std::optional<int> n_trajectories, horizon;
    std::optional<double> tail_tol;
};

void add_override_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--master-seed", o.master_seed);
    cmd->add_option("--env-kind", o.env_kind)->check(CLI::IsMember({"gridworld", "random"}));
    cmd->add_option("--rows", o.rows);
    cmd->add_option("--cols", o.cols);
    cmd->add_option("--slip-prob", o.slip_prob);
    cmd->add_option("--n-states", o.n_states);
    cmd->add_option("--n-actions", o.n_actions);
    cmd->add_option("--concentration", o.concentration);
    cmd->add_option("--discount", o.discount);
    cmd->add_option("--feature-dim", o.feature_dim);
    cmd->add_option("--width", o.width);
    cmd->add_option("--radius", o.radius);
    cmd->add_option("--variant", o.variant)->check(CLI::IsMember({"nested", "single_loop"}));
    cmd->add_option("--iterations", o.iterations);
    cmd->add_option("--alpha0", o.alpha0);
    cmd->add_option("--sigma", o.sigma);
    cmd->add_option("--sampling-mode", o.sampling_mode)
        ->check(CLI::IsMember({"exact_stationary", "chain_rollout"}));
    cmd->add_option("--chain-burn-in", o.chain_burn_in);
    cmd->add_option("--diagnostics-interval", o.diagnostics_interval);
    cmd->add_option("--checkpoint-interval", o.checkpoint_interval);
    cmd->add_option("--reset-inner", o.reset_inner);
    cmd->add_option("--n-trajectories", o.n_trajectories);
    cmd->add_option("--horizon", o.horizon);
    cmd->add_option("--tail-tol", o.tail_tol);
}

mlirl::ExperimentConfig load_with_overrides(const std::string& path, const Overrides& o) {
    mlirl::ExperimentConfig c = mlirl::load_experiment_config(path);
    if (o.master_seed) c.master_seed = *o.master_seed;
    if (o.env_kind) c.env_kind = *o.env_kind;
    if (o.rows) c.rows = *o.rows;
    if (o.cols) c.cols = *o.cols;
    if (o.slip_prob) c.slip_prob = *o.slip_prob;
    if (o.n_states) c.n_states = *o.n_states;
    if (o.n_actions) c.n_actions = *o.n_actions;
    if (o.concentration) c.concentration = *o.concentration;
    if (o.discount) c.discount = *o.discount;
    if (o.feature_dim) c.feature_dim = *o.feature_dim;
    if (o.width) c.width = *o.width;
    if (o.radius) c.radius = *o.radius;
    if (o.variant)
        c.variant = *o.variant == "nested" ? mlirl::IrlVariant::kNested
                                           : mlirl::IrlVariant::kSingleLoop;
    if (o.iterations) c.iterations = *o.iterations;
    if (o.alpha0) c.alpha0 = *o.alpha0;
    if (o.sigma) c.sigma = *o.sigma;
    if (o.sampling_mode)
        c.sampling_mode = *o.sampling_mode == "exact_stationary"
                              ? mlirl::SamplingMode::kExactStationary
                              : mlirl::SamplingMode::kChainRollout;
    if (o.chain_burn_in) c.chain_burn_in = *o.chain_burn_in;
    if (o.diagnostics_interval) c.diagnostics_interval = *o.diagnostics_interval;
    if (o.checkpoint_interval) c.checkpoint_interval = *o.checkpoint_interval;
    if (o.reset_inner) c.reset_inner = *o.reset_inner;
    if (o.n_trajectories) c.n_trajectories = *o.n_trajectories;
    if (o.horizon) c.horizon = *o.horizon;
    if (o.tail_tol) c.tail_tol = *o.tail_tol;
    c.validate();
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Maximum-likelihood IRL laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    std::string env_path = "env.json";
    std::string demos_path = "demos.jsonl";
    std::string expert_path = "expert.json";
    std::string out_dir;
    std::string report_out = "report.json";
    bool resume = false;
    int sweep = 0;
    std::vector<std::string> run_dirs;
    Overrides overrides;

    CLI::App* gen_env = app.add_subcommand("gen-env", "Write the mdp/v1 environment file");
    gen_env->add_option("--config", config_path, "experiment config (TOML)")->required();
    gen_env->add_option("--out", env_path, "output environment path");
    add_override_flags(gen_env, overrides);

    CLI::App* gen_demos =
        app.add_subcommand("gen-demos", "Sample expert demonstrations from an environment");
    gen_demos->add_option("--config", config_path)->required();
    gen_demos->add_option("--env", env_path, "environment file");
    gen_demos->add_option("--out", demos_path, "output demos JSONL path");
    gen_demos->add_option("--expert", expert_path, "output expert sidecar path");
    add_override_flags(gen_demos, overrides);

    CLI::App* run = app.add_subcommand("run", "Run the configured IRL variant");
    run->add_option("--config", config_path)->required();
    run->add_option("--env", env_path);
    run->add_option("--demos", demos_path);
    run->add_option("--expert", expert_path);
    run->add_option("--out-dir", out_dir, "output directory (default: config output.directory)");
    run->add_flag("--resume", resume, "continue from the latest checkpoint");
    run->add_option("--sweep", sweep,
                    "launch this many independent runs over consecutive master seeds");
    add_override_flags(run, overrides);

    std::string report_csv;
    CLI::App* report = app.add_subcommand("report", "Aggregate diagnostics from run directories");
    report->add_option("dirs", run_dirs, "run directories")->required()->expected(-1);
    report->add_option("--out", report_out, "output summary JSON path");
    report->add_option("--csv", report_csv, "also write the summary table as CSV");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen_env->parsed()) {
            const auto config = load_with_overrides(config_path, overrides);
            mlirl::cmd_gen_env(config, env_path);
            std::cout << "wrote " << env_path << "\n";
        } else if (gen_demos->parsed()) {
            const auto config = load_with_overrides(config_path, overrides);
            mlirl::cmd_gen_demos(config, env_path, demos_path, expert_path);
            std::cout << "wrote " << demos_path << " and " << expert_path << "\n";
        } else if (run->parsed()) {
            const auto config = load_with_overrides(config_path, overrides);
            const fs::path base = mlirl::resolve_output_path(
                out_dir.empty() ? config.output_directory : fs::path(out_dir));
            if (sweep > 0) {
                if (resume) throw mlirl::ConfigError("--resume does not combine with --sweep");
                const auto outcomes = mlirl::cmd_sweep(config, env_path, demos_path,
                                                       expert_path, base, sweep);
                for (const auto& outcome : outcomes)
                    std::cout << outcome.directory.string() << ": " << outcome.iterations
                              << " iterations, " << outcome.total_td_steps << " TD steps\n";
            } else {
                const auto outcome =
                    mlirl::cmd_run(config, env_path, demos_path, expert_path, base, resume);
                std::cout << outcome.directory.string() << ": " << outcome.iterations
                          << " iterations, " << outcome.total_td_steps << " TD steps\n";
            }
        } else if (report->parsed()) {
            std::vector<fs::path> dirs(run_dirs.begin(), run_dirs.end());
            mlirl::cmd_report(dirs, report_out, report_csv);
            std::cout << "wrote " << report_out << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
