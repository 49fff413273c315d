#include "mlirl/ml_irl.hpp"

#include <cmath>

#include "mlirl/errors.hpp"
#include "mlirl/soft_rl.hpp"

namespace mlirl {

void IrlConfig::validate() const {
    if (outer_iterations < 1) throw ConfigError("IrlConfig: outer_iterations must be >= 1");
    if (!(sigma > 0.0 && sigma < 1.0)) throw ConfigError("IrlConfig: sigma must be in (0,1)");
    if (alpha0 < 0.0) throw ConfigError("IrlConfig: alpha0 must be nonnegative");
    if (width < 1) throw ConfigError("IrlConfig: width must be >= 1");
    if (q_radius <= 0.0) throw ConfigError("IrlConfig: q_radius must be positive");
    if (horizon < 1) throw ConfigError("IrlConfig: horizon must be >= 1");
    if (diagnostics_interval < 1)
        throw ConfigError("IrlConfig: diagnostics_interval must be >= 1");
}

StepSizes stepsize_schedule(const IrlConfig& config, double discount) {
    config.validate();
    const double k = static_cast<double>(config.outer_iterations);
    StepSizes s;
    s.alpha = config.alpha0 / std::pow(k, config.sigma);
    const double cap = (1.0 - discount) / 8.0;
    const double rate = config.variant == IrlVariant::kNested ? std::pow(k, -0.5)
                                                              : std::pow(k, -0.75);
    s.eta = config.eta_override >= 0.0 ? config.eta_override : std::min(rate, cap);
    return s;
}

Eigen::VectorXd reward_gradient_estimate(const TwoLayerNet& reward_net,
                                         const Trajectory& expert_traj,
                                         const Trajectory& agent_traj, double discount,
                                         const FeatureMap& features) {
    if (expert_traj.horizon() < 1 || agent_traj.horizon() < 1)
        throw ContractViolation("reward_gradient_estimate: empty trajectory");
    return discounted_feature_sum(reward_net, expert_traj, discount, features) -
           discounted_feature_sum(reward_net, agent_traj, discount, features);
}

IrlDriver::IrlDriver(const Mdp& mdp, const FeatureMap& features, const DemoDataset& demos,
                     IrlConfig config, RngBundle rng)
    : mdp_(mdp), features_(features), demos_(demos), config_(config),
      steps_(stepsize_schedule(config, mdp.discount)), rng_init_(std::move(rng.init)),
      rng_td_(std::move(rng.td_sampling)), rng_traj_(std::move(rng.trajectory)),
      rng_demo_(std::move(rng.demo)),
      reward_net_(TwoLayerNet::init(config.width, features.dim, config.q_radius, rng_init_)),
      learner_(TwoLayerNet::init(config.width, features.dim, config.q_radius, rng_init_)),
      policy_(TabularPolicy::uniform(mdp.n_states, mdp.n_actions)),
      exploration_policy_(TabularPolicy::uniform(mdp.n_states, mdp.n_actions)) {
    if (demos_.trajectories.empty()) throw ConfigError("IrlDriver: empty demo dataset");
    mdp_.validate();
    if (features_.n_states != mdp_.n_states || features_.n_actions != mdp_.n_actions)
        throw ConfigError("IrlDriver: feature map does not match the MDP");
    if (config_.sampling_mode == SamplingMode::kChainRollout) {
        chain_state_ = rng_td_.categorical(mdp_.initial_dist);
        for (int t = 0; t < config_.chain_burn_in; ++t) {
            const int a = rng_td_.categorical(policy_.probs.row(chain_state_).transpose());
            chain_state_ = rng_td_.categorical(
                mdp_.transition.row(mdp_.pair_index(chain_state_, a)).transpose());
        }
    } else if (config_.variant == IrlVariant::kNested) {
        nested_mu_ = stationary_distribution(
            mdp_, TabularPolicy::uniform(mdp_.n_states, mdp_.n_actions));
    }
}

TdSample IrlDriver::draw_tuple() {
    // Nested rounds sample from the fixed uniform exploration policy's
    // stationary distribution; the single loop tracks the current policy.
    TdSample sample;
    if (config_.sampling_mode == SamplingMode::kExactStationary) {
        const Eigen::VectorXd mu = config_.variant == IrlVariant::kNested
                                       ? nested_mu_
                                       : stationary_distribution(mdp_, policy_);
        const int pair = rng_td_.categorical(mu);
        sample.state = pair / mdp_.n_actions;
        sample.action = pair % mdp_.n_actions;
    } else {
        const TabularPolicy& exploration =
            config_.variant == IrlVariant::kNested ? exploration_policy_ : policy_;
        sample.state = chain_state_;
        sample.action = rng_td_.categorical(exploration.probs.row(chain_state_).transpose());
        chain_state_ = rng_td_.categorical(
            mdp_.transition.row(mdp_.pair_index(sample.state, sample.action)).transpose());
    }
    sample.reward_value = reward_net_.forward(features_(sample.state, sample.action));
    sample.next_state = rng_td_.categorical(
        mdp_.transition.row(mdp_.pair_index(sample.state, sample.action)).transpose());
    return sample;
}

void IrlDriver::step() {
    if (done()) throw ContractViolation("IrlDriver::step: run already finished");
    const long k = iteration_;

    if (config_.variant == IrlVariant::kNested) {
        if (config_.reset_inner)
            learner_.reset_to_init();
        else if (k > 0)
            learner_.warm_start_from_average();
        const long rounds =
            config_.nested_inner_override > 0 ? config_.nested_inner_override : k + 2;
        for (long t = 0; t < rounds; ++t) {
            last_td_residual_ = learner_.td_step(reward_net_, draw_tuple(), steps_.eta,
                                                 mdp_.discount, features_);
            ++total_td_steps_;
        }
    } else {
        last_td_residual_ = learner_.td_step(reward_net_, draw_tuple(), steps_.eta,
                                             mdp_.discount, features_);
        ++total_td_steps_;
    }

    // Policy improvement from the averaged Q net.
    policy_ = boltzmann_policy(
        SoftQTable{forward_table_with(learner_.q_net(), learner_.avg_weights(), features_)});

    if (k % config_.diagnostics_interval == 0 || k + 1 == config_.outer_iterations)
        diagnostics_.push_back(measure(last_td_residual_));

    const Trajectory& expert_traj = sample_demo(demos_, rng_demo_);
    const Trajectory agent_traj =
        sample_trajectory(mdp_, policy_, config_.horizon, rng_traj_);
    const Eigen::VectorXd g =
        reward_gradient_estimate(reward_net_, expert_traj, agent_traj, mdp_.discount, features_);

    RowMatrixXd theta = reward_net_.weights();
    theta += steps_.alpha *
             Eigen::Map<const RowMatrixXd>(g.data(), theta.rows(), theta.cols());
    reward_net_.set_weights(std::move(theta));

    ++iteration_;
}

DiagnosticsRecord IrlDriver::measure(double td_residual) const {
    const Eigen::VectorXd counts =
        demo_discounted_counts(demos_, mdp_.discount, mdp_.n_states, mdp_.n_actions);
    const RowMatrixXd reward = forward_table(reward_net_, features_);
    const SoftSolution oracle = solve_soft_optimal(mdp_, reward, 1e-10);
    const double expert_reward =
        counts.dot(Eigen::Map<const Eigen::VectorXd>(reward.data(), reward.size()));

    DiagnosticsRecord rec;
    rec.iteration = iteration_;
    rec.policy_log_gap = policy_log_gap(policy_, oracle.policy);
    rec.likelihood = expert_reward - mdp_.initial_dist.dot(oracle.v.values);

    const Eigen::VectorXd grad = weighted_grad_sum(
        reward_net_, features_,
        counts - occupancy_measure(mdp_, oracle.policy) / (1.0 - mdp_.discount));
    rec.grad_norm_sq = grad.squaredNorm();

    const SoftVTable agent_value = soft_v_of_policy(mdp_, reward, policy_);
    rec.saddle_value = expert_reward - mdp_.initial_dist.dot(agent_value.values);
    rec.saddle_gap = rec.saddle_value - rec.likelihood;
    rec.td_residual = std::abs(td_residual);
    rec.eta = steps_.eta;
    rec.alpha = steps_.alpha;
    return rec;
}

IrlSnapshot IrlDriver::snapshot() const {
    IrlSnapshot snap;
    snap.iteration = iteration_;
    snap.total_td_steps = total_td_steps_;
    snap.reward_weights = reward_net_.weights();
    snap.q_weights = learner_.q_net().weights();
    snap.avg_weights = learner_.avg_weights();
    snap.avg_count = learner_.step_count();
    snap.last_td_residual = last_td_residual_;
    snap.chain_state = chain_state_;
    snap.rng_td_sampling = rng_td_.save_state();
    snap.rng_trajectory = rng_traj_.save_state();
    snap.rng_demo = rng_demo_.save_state();
    return snap;
}

void IrlDriver::restore(const IrlSnapshot& snap) {
    iteration_ = snap.iteration;
    total_td_steps_ = snap.total_td_steps;
    reward_net_.set_weights(snap.reward_weights);
    learner_.restore_window(snap.q_weights, snap.avg_weights, snap.avg_count);
    last_td_residual_ = snap.last_td_residual;
    chain_state_ = snap.chain_state;
    rng_td_.load_state(snap.rng_td_sampling);
    rng_traj_.load_state(snap.rng_trajectory);
    rng_demo_.load_state(snap.rng_demo);
    policy_ = boltzmann_policy(
        SoftQTable{forward_table_with(learner_.q_net(), learner_.avg_weights(), features_)});
}

namespace {

IrlRunResult run_driver(const Mdp& mdp, const FeatureMap& features, const DemoDataset& demos,
                        const IrlConfig& config, RngBundle rng) {
    IrlDriver driver(mdp, features, demos, config, std::move(rng));
    while (!driver.done()) driver.step();
    IrlRunResult result{driver.policy(), driver.reward_net(), driver.learner().averaged_net(),
                        driver.diagnostics(), driver.total_td_steps()};
    return result;
}

}  // namespace

IrlRunResult run_mlirl_nested(const Mdp& mdp, const FeatureMap& features,
                              const DemoDataset& demos, const IrlConfig& config,
                              RngBundle rng) {
    if (config.variant != IrlVariant::kNested)
        throw ContractViolation("run_mlirl_nested: config.variant must be nested");
    return run_driver(mdp, features, demos, config, std::move(rng));
}

IrlRunResult run_mlirl_single_loop(const Mdp& mdp, const FeatureMap& features,
                                   const DemoDataset& demos, const IrlConfig& config,
                                   RngBundle rng) {
    if (config.variant != IrlVariant::kSingleLoop)
        throw ContractViolation("run_mlirl_single_loop: config.variant must be single_loop");
    return run_driver(mdp, features, demos, config, std::move(rng));
}

}  // namespace mlirl
