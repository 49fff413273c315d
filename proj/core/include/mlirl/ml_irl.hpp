#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mlirl/demos.hpp"
#include "mlirl/env.hpp"
#include "mlirl/likelihood.hpp"
#include "mlirl/net.hpp"
#include "mlirl/rng.hpp"
#include "mlirl/soft_q_learning.hpp"

namespace mlirl {

enum class IrlVariant { kNested, kSingleLoop };

struct IrlConfig {
    IrlVariant variant = IrlVariant::kSingleLoop;
    int outer_iterations = 0;  // K
    double alpha0 = 1.0;       // reward stepsize numerator
    double sigma = 0.5;        // reward stepsize exponent in (0,1)
    int width = 0;             // m
    double q_radius = 0.0;     // B, ball constraint of the Q net
    int horizon = 0;           // H for sampled trajectories
    SamplingMode sampling_mode = SamplingMode::kExactStationary;
    int chain_burn_in = 100;
    int diagnostics_interval = 10;
    /// Nested only: reset the inner learner to the frozen initialization
    /// each round instead of warm-starting from the previous average.
    bool reset_inner = false;
    /// Nested only: when positive, overrides the literal T = k+2 inner
    /// schedule (used by sanity-ordering experiments).
    long nested_inner_override = 0;
    /// Experiment knob: when nonnegative, replaces the theorem eta schedule
    /// (0 freezes the TD iterates entirely).
    double eta_override = -1.0;

    void validate() const;
};

/// alpha = alpha0 / K^sigma; eta = min{K^{-1/2}, (1-gamma)/8} for the nested
/// variant and min{K^{-3/4}, (1-gamma)/8} for the single loop.
struct StepSizes {
    double alpha = 0.0;
    double eta = 0.0;
};
StepSizes stepsize_schedule(const IrlConfig& config, double discount);

/// g_k = h(theta; tau_E) - h(theta; tau_A) with
/// h(theta; tau) = sum_t gamma^t grad r_hat(s_t, a_t; theta).
Eigen::VectorXd reward_gradient_estimate(const TwoLayerNet& reward_net,
                                         const Trajectory& expert_traj,
                                         const Trajectory& agent_traj, double discount,
                                         const FeatureMap& features);

/// Serializable state of a run at an outer-iteration boundary.
struct IrlSnapshot {
    long iteration = 0;
    long total_td_steps = 0;
    RowMatrixXd reward_weights;
    RowMatrixXd q_weights;
    RowMatrixXd avg_weights;
    long avg_count = 0;
    double last_td_residual = 0.0;
    int chain_state = 0;
    std::string rng_td_sampling;
    std::string rng_trajectory;
    std::string rng_demo;
};

/// Step-wise bi-level driver covering both variants. One step() is one outer
/// iteration: the inner TD phase (one tuple for the single loop, T = k+2 for
/// the nested variant), policy improvement from the averaged Q net,
/// trajectory sampling, and the reward ascent update. Diagnostics are
/// measurements computed at the configured interval; the algorithms never
/// read them.
class IrlDriver {
public:
    IrlDriver(const Mdp& mdp, const FeatureMap& features, const DemoDataset& demos,
              IrlConfig config, RngBundle rng);

    void step();
    bool done() const { return iteration_ >= config_.outer_iterations; }
    long iteration() const { return iteration_; }
    long total_td_steps() const { return total_td_steps_; }

    const TabularPolicy& policy() const { return policy_; }
    const TwoLayerNet& reward_net() const { return reward_net_; }
    const SoftQLearner& learner() const { return learner_; }
    const StepSizes& stepsizes() const { return steps_; }
    const std::vector<DiagnosticsRecord>& diagnostics() const { return diagnostics_; }

    IrlSnapshot snapshot() const;
    void restore(const IrlSnapshot& snap);

private:
    DiagnosticsRecord measure(double td_residual) const;
    TdSample draw_tuple();

    const Mdp& mdp_;
    const FeatureMap& features_;
    const DemoDataset& demos_;
    IrlConfig config_;
    StepSizes steps_;

    RngStream rng_init_;
    RngStream rng_td_;
    RngStream rng_traj_;
    RngStream rng_demo_;

    TwoLayerNet reward_net_;
    SoftQLearner learner_;
    TabularPolicy policy_;
    TabularPolicy exploration_policy_;  // fixed uniform, nested variant
    long iteration_ = 0;
    long total_td_steps_ = 0;
    double last_td_residual_ = 0.0;
    int chain_state_ = 0;
    Eigen::VectorXd nested_mu_;  // stationary distribution of the fixed
                                 // exploration policy (nested, exact mode)

    std::vector<DiagnosticsRecord> diagnostics_;
};

struct IrlRunResult {
    TabularPolicy policy;
    TwoLayerNet reward_net;
    TwoLayerNet q_avg_net;
    std::vector<DiagnosticsRecord> diagnostics;
    long total_td_steps = 0;
};

/// Algorithm: dynamically truncated nested ML-IRL (T = k+2 inner TD rounds).
IrlRunResult run_mlirl_nested(const Mdp& mdp, const FeatureMap& features,
                              const DemoDataset& demos, const IrlConfig& config,
                              RngBundle rng);

/// Algorithm: two-timescale single-loop ML-IRL (one TD tuple per outer step).
IrlRunResult run_mlirl_single_loop(const Mdp& mdp, const FeatureMap& features,
                                   const DemoDataset& demos, const IrlConfig& config,
                                   RngBundle rng);

}  // namespace mlirl
