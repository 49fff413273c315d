#pragma once

#include <Eigen/Core>
#include <functional>
#include <ostream>

#include "mlirl/env.hpp"
#include "mlirl/net.hpp"
#include "mlirl/rng.hpp"

namespace mlirl {

/// One TD tuple (s, a, r_hat(s,a), s').
struct TdSample {
    int state = 0;
    int action = 0;
    double reward_value = 0.0;
    int next_state = 0;
};

/// delta = Q_hat(s,a;W) - r_hat(s,a;theta) - gamma logsumexp_a' Q_hat(s',a';W).
double bellman_residual(const TwoLayerNet& q_net, const TwoLayerNet& reward_net,
                        const TdSample& sample, double discount, const FeatureMap& features);

/// Projected TD learner with running weight averaging. After t steps the
/// average equals the arithmetic mean of W_0, W_1, ..., W_t where W_0 is the
/// weight matrix at the start of the current averaging window.
class SoftQLearner {
public:
    explicit SoftQLearner(TwoLayerNet q_net);

    const TwoLayerNet& q_net() const { return q_net_; }
    const RowMatrixXd& avg_weights() const { return avg_weights_; }
    long step_count() const { return step_count_; }

    /// TwoLayerNet carrying the averaged weights (for policy improvement and
    /// the Algorithm 1 output).
    TwoLayerNet averaged_net() const;

    /// TD update, ball projection, and averaging; returns the residual delta.
    double td_step(const TwoLayerNet& reward_net, const TdSample& sample, double stepsize,
                   double discount, const FeatureMap& features);

    /// Restart the averaging window at the current weights (used when a new
    /// round warm-starts from a previous round's average).
    void restart_averaging();

    /// Reset weights and average to the net's frozen initialization snapshot.
    void reset_to_init();

    /// Warm start: adopt the current average as the new weights, then
    /// restart the averaging window there.
    void warm_start_from_average();

    /// Restore a checkpointed window (weights, running average, step count).
    void restore_window(RowMatrixXd weights, RowMatrixXd avg_weights, long step_count);

private:
    TwoLayerNet q_net_;
    RowMatrixXd avg_weights_;
    long step_count_ = 0;
};

enum class SamplingMode { kExactStationary, kChainRollout };

struct SoftQLearningOptions {
    long iterations = 0;
    /// Negative means the standalone default of iterations^{-1/2}; an
    /// explicit zero freezes the weights.
    double stepsize = -1.0;
    SamplingMode mode = SamplingMode::kExactStationary;
    int chain_burn_in = 100;
    /// Optional per-step trace sink (columns: t, delta, ||W_t - W_0||,
    /// mspbe_estimate). The MSPBE column is filled through mspbe_fn when
    /// provided and left as nan otherwise.
    std::ostream* trace = nullptr;
    int trace_stride = 1;
    std::function<double(const TwoLayerNet&)> mspbe_fn;
};

/// Algorithm: repeatedly sample (s, a) from the stationary distribution of
/// the exploration policy (exact categorical draws by default, persistent
/// chain rollouts behind the flag) with s' ~ P(.|s,a), run the projected TD
/// update, and return a net carrying the averaged weights.
TwoLayerNet run_soft_q_learning(const Mdp& mdp, const FeatureMap& features,
                                const TabularPolicy& exploration_policy,
                                const TwoLayerNet& reward_net, const SoftQLearningOptions& opts,
                                const TwoLayerNet& q_init, RngStream& rng);

}  // namespace mlirl
