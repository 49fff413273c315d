#include "mlirl/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "mlirl/errors.hpp"
#include "mlirl/toml_lite.hpp"

namespace mlirl {

using nlohmann::json;

int ExperimentConfig::effective_horizon() const {
    return horizon > 0 ? horizon : horizon_for_tail(discount, tail_tol);
}

IrlConfig ExperimentConfig::irl_config() const {
    IrlConfig irl;
    irl.variant = variant;
    irl.outer_iterations = iterations;
    irl.alpha0 = alpha0;
    irl.sigma = sigma;
    irl.width = width;
    irl.q_radius = radius;
    irl.horizon = effective_horizon();
    irl.sampling_mode = sampling_mode;
    irl.chain_burn_in = chain_burn_in;
    irl.diagnostics_interval = diagnostics_interval;
    irl.reset_inner = reset_inner;
    return irl;
}

void ExperimentConfig::validate() const {
    if (env_kind != "gridworld" && env_kind != "random")
        throw ConfigError("config: environment.kind must be gridworld or random");
    if (n_trajectories < 1) throw ConfigError("config: dataset.n_trajectories must be >= 1");
    if (horizon < 0) throw ConfigError("config: dataset.horizon must be >= 0");
    if (tail_tol <= 0.0) throw ConfigError("config: dataset.tail_tol must be positive");
    if (checkpoint_interval < 0) throw ConfigError("config: checkpoint_interval must be >= 0");
    irl_config().validate();
}

namespace {

std::string variant_name(IrlVariant v) {
    return v == IrlVariant::kNested ? "nested" : "single_loop";
}
std::string sampling_name(SamplingMode m) {
    return m == SamplingMode::kExactStationary ? "exact_stationary" : "chain_rollout";
}

}  // namespace

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    const toml::Table t = toml::parse_file(path);
    if (t.get_string_or("schema", "") != "experiment/v1")
        throw ConfigError(path.string() + ": expected schema = \"experiment/v1\"");

    ExperimentConfig c;
    c.master_seed = static_cast<std::uint64_t>(t.get_int("master_seed"));

    c.env_kind = t.get_string_or("environment.kind", c.env_kind);
    c.rows = static_cast<int>(t.get_int_or("environment.rows", c.rows));
    c.cols = static_cast<int>(t.get_int_or("environment.cols", c.cols));
    c.slip_prob = t.get_double_or("environment.slip_prob", c.slip_prob);
    c.n_states = static_cast<int>(t.get_int_or("environment.n_states", c.n_states));
    c.n_actions = static_cast<int>(t.get_int_or("environment.n_actions", c.n_actions));
    c.concentration = t.get_double_or("environment.concentration", c.concentration);
    c.discount = t.get_double_or("environment.discount", c.discount);
    c.feature_dim = static_cast<int>(t.get_int_or("environment.feature_dim", c.feature_dim));

    c.width = static_cast<int>(t.get_int_or("network.width", c.width));
    c.radius = t.get_double_or("network.radius", c.radius);

    const std::string variant = t.get_string_or("algorithm.variant", "single_loop");
    if (variant == "nested")
        c.variant = IrlVariant::kNested;
    else if (variant == "single_loop")
        c.variant = IrlVariant::kSingleLoop;
    else
        throw ConfigError("config: algorithm.variant must be nested or single_loop");
    c.iterations = static_cast<int>(t.get_int_or("algorithm.iterations", c.iterations));
    c.alpha0 = t.get_double_or("algorithm.alpha0", c.alpha0);
    c.sigma = t.get_double_or("algorithm.sigma", c.sigma);
    const std::string sampling =
        t.get_string_or("algorithm.sampling_mode", "exact_stationary");
    if (sampling == "exact_stationary")
        c.sampling_mode = SamplingMode::kExactStationary;
    else if (sampling == "chain_rollout")
        c.sampling_mode = SamplingMode::kChainRollout;
    else
        throw ConfigError("config: algorithm.sampling_mode must be exact_stationary or "
                          "chain_rollout");
    c.chain_burn_in = static_cast<int>(t.get_int_or("algorithm.chain_burn_in", c.chain_burn_in));
    c.diagnostics_interval =
        static_cast<int>(t.get_int_or("algorithm.diagnostics_interval", c.diagnostics_interval));
    c.checkpoint_interval =
        static_cast<int>(t.get_int_or("algorithm.checkpoint_interval", c.checkpoint_interval));
    c.reset_inner = t.get_bool_or("algorithm.reset_inner", c.reset_inner);

    c.n_trajectories = static_cast<int>(t.get_int_or("dataset.n_trajectories", c.n_trajectories));
    c.horizon = static_cast<int>(t.get_int_or("dataset.horizon", c.horizon));
    c.tail_tol = t.get_double_or("dataset.tail_tol", c.tail_tol);

    c.output_directory = t.get_string_or("output.directory", c.output_directory.string());

    c.validate();
    return c;
}

void write_experiment_config(const std::filesystem::path& path, const ExperimentConfig& c) {
    toml::Table t;
    t.set_string("schema", "experiment/v1");
    t.set_int("master_seed", static_cast<std::int64_t>(c.master_seed));

    t.set_string("environment.kind", c.env_kind);
    if (c.env_kind == "gridworld") {
        t.set_int("environment.rows", c.rows);
        t.set_int("environment.cols", c.cols);
        t.set_double("environment.slip_prob", c.slip_prob);
    } else {
        t.set_int("environment.n_states", c.n_states);
        t.set_int("environment.n_actions", c.n_actions);
        t.set_double("environment.concentration", c.concentration);
    }
    t.set_double("environment.discount", c.discount);
    t.set_int("environment.feature_dim", c.feature_dim);

    t.set_int("network.width", c.width);
    t.set_double("network.radius", c.radius);

    t.set_string("algorithm.variant", variant_name(c.variant));
    t.set_int("algorithm.iterations", c.iterations);
    t.set_double("algorithm.alpha0", c.alpha0);
    t.set_double("algorithm.sigma", c.sigma);
    t.set_string("algorithm.sampling_mode", sampling_name(c.sampling_mode));
    t.set_int("algorithm.chain_burn_in", c.chain_burn_in);
    t.set_int("algorithm.diagnostics_interval", c.diagnostics_interval);
    t.set_int("algorithm.checkpoint_interval", c.checkpoint_interval);
    t.set_bool("algorithm.reset_inner", c.reset_inner);

    t.set_int("dataset.n_trajectories", c.n_trajectories);
    t.set_int("dataset.horizon", c.effective_horizon());
    t.set_double("dataset.tail_tol", c.tail_tol);

    t.set_string("output.directory", c.output_directory.string());
    toml::write_file(path, t);
}

std::filesystem::path resolve_output_path(const std::filesystem::path& path) {
    if (path.is_absolute()) return path;
    if (const char* root = std::getenv("MLIRL_OUTPUT_ROOT"); root && *root)
        return std::filesystem::path(root) / path;
    return path;
}

EnvBundle generate_environment(const ExperimentConfig& config) {
    config.validate();
    RngStream rng(config.master_seed, "env");
    EnvBundle bundle;
    if (config.env_kind == "gridworld") {
        auto [mdp, features] = build_gridworld(config.rows, config.cols, config.slip_prob,
                                               config.discount, config.feature_dim, rng);
        bundle.mdp = std::move(mdp);
        bundle.features = std::move(features);
    } else {
        auto [mdp, features] =
            build_random_mdp(config.n_states, config.n_actions, config.feature_dim,
                             config.concentration, config.discount, rng);
        bundle.mdp = std::move(mdp);
        bundle.features = std::move(features);
    }

    const TabularPolicy uniform =
        TabularPolicy::uniform(bundle.mdp.n_states, bundle.mdp.n_actions);
    bundle.metadata["kind"] = config.env_kind;
    bundle.metadata["master_seed"] = std::to_string(config.master_seed);
    bundle.metadata["second_eigenvalue_modulus"] =
        format_double(second_eigenvalue_modulus(bundle.mdp, uniform));
    bundle.metadata["feature_regularity_min"] =
        format_double(feature_regularity_diagnostic(bundle.features, 64, rng));
    bundle.metadata["horizon"] = std::to_string(config.effective_horizon());
    return bundle;
}

DemoDataset generate_demos(const ExperimentConfig& config, const EnvBundle& env) {
    RngStream rng(config.master_seed, "demo");
    return demo_dataset_generate(env.mdp, config.n_trajectories, config.effective_horizon(),
                                 rng);
}

void cmd_gen_env(const ExperimentConfig& config, const std::filesystem::path& env_path) {
    const EnvBundle bundle = generate_environment(config);
    save_environment(env_path, bundle.mdp, bundle.features, bundle.metadata);
}

void cmd_gen_demos(const ExperimentConfig& config, const std::filesystem::path& env_path,
                   const std::filesystem::path& demos_path,
                   const std::filesystem::path& expert_path) {
    const EnvBundle env = load_environment(env_path);
    const DemoDataset demos = generate_demos(config, env);
    save_trajectories_jsonl(demos_path, demos.trajectories);
    save_expert_sidecar(expert_path, demos.expert_policy, demos.expert_q, demos.horizon);
}

namespace {

constexpr const char* kCheckpointSchema = "irl-checkpoint/v1";

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, long iteration) {
    char name[32];
    std::snprintf(name, sizeof name, "ckpt_%08ld.json", iteration);
    return dir / "checkpoints" / name;
}

void save_checkpoint(const std::filesystem::path& dir, const IrlSnapshot& snap,
                     const TwoLayerNet& reward_net, const TwoLayerNet& q_net) {
    std::filesystem::create_directories(dir / "checkpoints");
    const std::filesystem::path reward_path =
        dir / "checkpoints" / ("reward_" + std::to_string(snap.iteration) + ".json");
    const std::filesystem::path q_path =
        dir / "checkpoints" / ("qnet_" + std::to_string(snap.iteration) + ".json");
    save_net(reward_path, reward_net);
    save_net(q_path, q_net);

    json doc;
    doc["schema"] = kCheckpointSchema;
    doc["iteration"] = snap.iteration;
    doc["total_td_steps"] = snap.total_td_steps;
    doc["avg_count"] = snap.avg_count;
    doc["last_td_residual"] = snap.last_td_residual;
    doc["chain_state"] = snap.chain_state;
    doc["reward_net"] = reward_path.filename().string();
    doc["q_net"] = q_path.filename().string();
    doc["avg_weights"] = encode_base64(
        reinterpret_cast<const unsigned char*>(snap.avg_weights.data()),
        sizeof(double) * static_cast<size_t>(snap.avg_weights.size()));
    doc["rng"] = {{"td_sampling", snap.rng_td_sampling},
                  {"trajectory", snap.rng_trajectory},
                  {"demo", snap.rng_demo}};
    std::ofstream out(checkpoint_path(dir, snap.iteration));
    if (!out) throw ConfigError("cannot write checkpoint");
    out << doc.dump(2) << '\n';
}

std::optional<long> latest_checkpoint(const std::filesystem::path& dir) {
    const std::filesystem::path root = dir / "checkpoints";
    if (!std::filesystem::exists(root)) return std::nullopt;
    std::optional<long> best;
    for (const auto& entry : std::filesystem::directory_iterator(root)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("ckpt_", 0) != 0) continue;
        const long k = std::stol(name.substr(5, name.size() - 5 - 5));
        if (!best || k > *best) best = k;
    }
    return best;
}

IrlSnapshot load_checkpoint(const std::filesystem::path& dir, long iteration,
                            TwoLayerNet* reward_net, TwoLayerNet* q_net) {
    std::ifstream in(checkpoint_path(dir, iteration));
    if (!in) throw ConfigError("cannot open checkpoint for iteration " +
                               std::to_string(iteration));
    json doc;
    in >> doc;
    if (doc.at("schema") != kCheckpointSchema)
        throw ConfigError("unexpected checkpoint schema");

    IrlSnapshot snap;
    snap.iteration = doc.at("iteration").get<long>();
    snap.total_td_steps = doc.at("total_td_steps").get<long>();
    snap.avg_count = doc.at("avg_count").get<long>();
    snap.last_td_residual = doc.at("last_td_residual").get<double>();
    snap.chain_state = doc.at("chain_state").get<int>();

    *reward_net = load_net(dir / "checkpoints" / doc.at("reward_net").get<std::string>());
    *q_net = load_net(dir / "checkpoints" / doc.at("q_net").get<std::string>());
    snap.reward_weights = reward_net->weights();
    snap.q_weights = q_net->weights();

    const std::vector<unsigned char> avg =
        decode_base64(doc.at("avg_weights").get<std::string>());
    snap.avg_weights.resize(q_net->width(), q_net->dim());
    if (avg.size() != sizeof(double) * static_cast<size_t>(snap.avg_weights.size()))
        throw ConfigError("checkpoint: avg_weights blob has wrong size");
    std::memcpy(snap.avg_weights.data(), avg.data(), avg.size());

    snap.rng_td_sampling = doc.at("rng").at("td_sampling").get<std::string>();
    snap.rng_trajectory = doc.at("rng").at("trajectory").get<std::string>();
    snap.rng_demo = doc.at("rng").at("demo").get<std::string>();
    return snap;
}

}  // namespace

RunOutcome cmd_run(const ExperimentConfig& config, const std::filesystem::path& env_path,
                   const std::filesystem::path& demos_path,
                   const std::filesystem::path& expert_path,
                   const std::filesystem::path& out_dir, bool resume) {
    config.validate();
    const EnvBundle env = load_environment(env_path);

    DemoDataset demos;
    demos.trajectories = load_trajectories_jsonl(demos_path);
    for (const Trajectory& traj : demos.trajectories)
        traj.validate(env.mdp.n_states, env.mdp.n_actions);
    const ExpertSidecar sidecar = load_expert_sidecar(expert_path);
    demos.expert_policy = sidecar.policy;
    demos.expert_q = sidecar.q;
    demos.horizon = sidecar.horizon;

    std::filesystem::create_directories(out_dir);
    write_experiment_config(out_dir / "config.toml", config);

    IrlDriver driver(env.mdp, env.features, demos, config.irl_config(),
                     RngBundle::from_master(config.master_seed));

    size_t flushed = 0;
    const std::filesystem::path csv_path = out_dir / "diagnostics.csv";
    std::optional<DiagnosticsWriter> writer;

    if (resume) {
        const std::optional<long> at = latest_checkpoint(out_dir);
        if (!at) throw ConfigError("cmd_run: resume requested but no checkpoint in " +
                                   out_dir.string());
        TwoLayerNet reward = driver.reward_net();
        TwoLayerNet q = driver.learner().q_net();
        const IrlSnapshot snap = load_checkpoint(out_dir, *at, &reward, &q);
        if (reward.signs() != driver.reward_net().signs() ||
            reward.init_weights() != driver.reward_net().init_weights())
            throw ConfigError("cmd_run: checkpoint does not match this config's master seed");
        driver.restore(snap);
        // Keep only rows from before the checkpoint; the continuation
        // re-emits everything after it.
        std::vector<DiagnosticsRecord> kept;
        for (const DiagnosticsRecord& r : load_diagnostics_csv(csv_path))
            if (r.iteration < *at) kept.push_back(r);
        save_diagnostics_csv(csv_path, kept);
        writer.emplace(csv_path, /*append=*/true);
    } else {
        writer.emplace(csv_path, /*append=*/false);
    }

    while (!driver.done()) {
        driver.step();
        for (; flushed < driver.diagnostics().size(); ++flushed)
            writer->write(driver.diagnostics()[flushed]);
        const bool at_interval = config.checkpoint_interval > 0 &&
                                 driver.iteration() % config.checkpoint_interval == 0;
        if (at_interval || driver.done())
            save_checkpoint(out_dir, driver.snapshot(), driver.reward_net(),
                            driver.learner().q_net());
    }

    save_net(out_dir / "reward_net.json", driver.reward_net());
    save_net(out_dir / "q_net.json", driver.learner().averaged_net());

    json info;
    info["schema"] = "run-info/v1";
    info["iterations"] = driver.iteration();
    info["total_td_steps"] = driver.total_td_steps();
    info["variant"] = variant_name(config.variant);
    std::ofstream out(out_dir / "run_info.json");
    out << info.dump(2) << '\n';

    return RunOutcome{driver.iteration(), driver.total_td_steps(), out_dir};
}

std::vector<RunOutcome> cmd_sweep(const ExperimentConfig& config,
                                  const std::filesystem::path& env_path,
                                  const std::filesystem::path& demos_path,
                                  const std::filesystem::path& expert_path,
                                  const std::filesystem::path& out_root, int n_seeds) {
    if (n_seeds < 1) throw ConfigError("cmd_sweep: n_seeds must be >= 1");
    std::vector<RunOutcome> outcomes(n_seeds);
    std::vector<std::exception_ptr> failures(n_seeds);
    std::vector<std::thread> workers;
    workers.reserve(n_seeds);
    for (int i = 0; i < n_seeds; ++i) {
        workers.emplace_back([&, i] {
            try {
                ExperimentConfig local = config;
                local.master_seed = config.master_seed + static_cast<std::uint64_t>(i);
                const std::filesystem::path dir =
                    out_root / ("seed_" + std::to_string(local.master_seed));
                outcomes[i] = cmd_run(local, env_path, demos_path, expert_path, dir,
                                      /*resume=*/false);
            } catch (...) {
                failures[i] = std::current_exception();
            }
        });
    }
    for (std::thread& w : workers) w.join();
    for (const std::exception_ptr& failure : failures)
        if (failure) std::rethrow_exception(failure);
    return outcomes;
}

QuartileSummary quartile_means(const std::vector<double>& values) {
    if (values.empty()) throw ConfigError("quartile_means: no values");
    const size_t quarter = std::max<size_t>(1, values.size() / 4);
    QuartileSummary s;
    double first = 0.0, last = 0.0;
    for (size_t i = 0; i < quarter; ++i) {
        first += values[i];
        last += values[values.size() - 1 - i];
    }
    s.first_quartile_mean = first / static_cast<double>(quarter);
    s.last_quartile_mean = last / static_cast<double>(quarter);
    return s;
}

RunSummary summarize_run(const std::filesystem::path& run_dir) {
    const std::vector<DiagnosticsRecord> records =
        load_diagnostics_csv(run_dir / "diagnostics.csv");
    if (records.empty()) throw ConfigError("summarize_run: no diagnostics in " +
                                           run_dir.string());
    RunSummary summary;
    summary.directory = run_dir.string();
    summary.records = static_cast<int>(records.size());

    std::vector<double> gaps, grads;
    gaps.reserve(records.size());
    grads.reserve(records.size());
    for (const DiagnosticsRecord& r : records) {
        gaps.push_back(r.policy_log_gap);
        grads.push_back(r.grad_norm_sq);
    }
    summary.policy_log_gap = quartile_means(gaps);
    summary.grad_norm_sq = quartile_means(grads);
    summary.final_likelihood = records.back().likelihood;
    summary.final_saddle_gap = records.back().saddle_gap;
    return summary;
}

namespace {

const std::vector<std::pair<std::string, double (*)(const RunSummary&)>>& summary_columns() {
    static const std::vector<std::pair<std::string, double (*)(const RunSummary&)>> columns = {
        {"policy_log_gap_first_quartile_mean",
         [](const RunSummary& s) { return s.policy_log_gap.first_quartile_mean; }},
        {"policy_log_gap_last_quartile_mean",
         [](const RunSummary& s) { return s.policy_log_gap.last_quartile_mean; }},
        {"grad_norm_sq_first_quartile_mean",
         [](const RunSummary& s) { return s.grad_norm_sq.first_quartile_mean; }},
        {"grad_norm_sq_last_quartile_mean",
         [](const RunSummary& s) { return s.grad_norm_sq.last_quartile_mean; }},
        {"final_likelihood", [](const RunSummary& s) { return s.final_likelihood; }},
        {"final_saddle_gap", [](const RunSummary& s) { return s.final_saddle_gap; }},
    };
    return columns;
}

}  // namespace

void cmd_report(const std::vector<std::filesystem::path>& run_dirs,
                const std::filesystem::path& out_path,
                const std::filesystem::path& csv_path) {
    if (run_dirs.empty()) throw ConfigError("cmd_report: need at least one run directory");

    std::vector<RunSummary> summaries;
    json runs = json::array();
    for (const std::filesystem::path& dir : run_dirs) {
        const RunSummary s = summarize_run(dir);
        summaries.push_back(s);
        json row{{"directory", s.directory}, {"records", s.records}};
        for (const auto& [name, getter] : summary_columns()) row[name] = getter(s);
        runs.push_back(std::move(row));
    }

    auto mean_of = [&](double (*getter)(const RunSummary&)) {
        double mean = 0.0;
        for (const RunSummary& s : summaries) mean += getter(s);
        return mean / static_cast<double>(summaries.size());
    };
    auto std_of = [&](double (*getter)(const RunSummary&), double mean) {
        double var = 0.0;
        for (const RunSummary& s : summaries) {
            const double d = getter(s) - mean;
            var += d * d;
        }
        return std::sqrt(var / static_cast<double>(summaries.size()));
    };

    json doc;
    doc["schema"] = "report/v1";
    doc["runs"] = std::move(runs);
    json aggregate;
    for (const auto& [name, getter] : summary_columns()) {
        const double mean = mean_of(getter);
        aggregate[name] = {{"mean", mean}, {"std", std_of(getter, mean)}};
    }
    doc["aggregate"] = std::move(aggregate);

    std::ofstream out(out_path);
    if (!out) throw ConfigError("cannot write " + out_path.string());
    out << doc.dump(2) << '\n';

    if (csv_path.empty()) return;
    std::ofstream csv(csv_path);
    if (!csv) throw ConfigError("cannot write " + csv_path.string());
    csv << "directory,records";
    for (const auto& [name, getter] : summary_columns()) csv << ',' << name;
    csv << '\n';
    for (const RunSummary& s : summaries) {
        csv << s.directory << ',' << s.records;
        for (const auto& [name, getter] : summary_columns())
            csv << ',' << format_double(getter(s));
        csv << '\n';
    }
    for (const char* row : {"mean", "std"}) {
        csv << row << ',' << summaries.size();
        for (const auto& [name, getter] : summary_columns()) {
            const double mean = mean_of(getter);
            csv << ','
                << format_double(std::strcmp(row, "mean") == 0 ? mean : std_of(getter, mean));
        }
        csv << '\n';
    }
}

}  // namespace mlirl
