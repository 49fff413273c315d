#include "mlirl/soft_q_learning.hpp"

#include <cmath>
#include <limits>

#include "mlirl/errors.hpp"

namespace mlirl {

namespace {

double next_state_soft_value(const TwoLayerNet& q_net, int next_state,
                             const FeatureMap& features) {
    Eigen::VectorXd q_next(features.n_actions);
    for (int a = 0; a < features.n_actions; ++a)
        q_next[a] = q_net.forward(features(next_state, a));
    const double peak = q_next.maxCoeff();
    return peak + std::log((q_next.array() - peak).exp().sum());
}

}  // namespace

double bellman_residual(const TwoLayerNet& q_net, const TwoLayerNet& reward_net,
                        const TdSample& sample, double discount, const FeatureMap& features) {
    const auto x = features(sample.state, sample.action);
    return q_net.forward(x) - reward_net.forward(x) -
           discount * next_state_soft_value(q_net, sample.next_state, features);
}

SoftQLearner::SoftQLearner(TwoLayerNet q_net)
    : q_net_(std::move(q_net)), avg_weights_(q_net_.weights()) {}

TwoLayerNet SoftQLearner::averaged_net() const {
    TwoLayerNet out = q_net_;
    out.set_weights(avg_weights_);
    return out;
}

double SoftQLearner::td_step(const TwoLayerNet& reward_net, const TdSample& sample,
                             double stepsize, double discount, const FeatureMap& features) {
    if (stepsize < 0.0) throw ContractViolation("td_step: stepsize must be nonnegative");
    const double delta = bellman_residual(q_net_, reward_net, sample, discount, features);

    const auto x = features(sample.state, sample.action);
    const Eigen::VectorXd pre = q_net_.weights() * x.transpose();
    const Eigen::VectorXd gate =
        ((pre.array() > 0.0).cast<double>() * q_net_.signs().array()).matrix();
    RowMatrixXd candidate = q_net_.weights();
    candidate.noalias() -= (stepsize * delta / q_net_.width()) * gate * x;

    q_net_.set_weights(q_net_.project_ball(candidate));

    // (t+1)/(t+2) W_bar + 1/(t+2) W_{t+1}, in the incremental form that is
    // exact when the iterate does not move.
    const double t = static_cast<double>(step_count_);
    avg_weights_ += (q_net_.weights() - avg_weights_) / (t + 2.0);
    ++step_count_;
    return delta;
}

void SoftQLearner::restart_averaging() {
    avg_weights_ = q_net_.weights();
    step_count_ = 0;
}

void SoftQLearner::reset_to_init() {
    q_net_.set_weights(q_net_.init_weights());
    restart_averaging();
}

void SoftQLearner::warm_start_from_average() {
    q_net_.set_weights(avg_weights_);
    step_count_ = 0;
}

void SoftQLearner::restore_window(RowMatrixXd weights, RowMatrixXd avg_weights,
                                  long step_count) {
    q_net_.set_weights(std::move(weights));
    avg_weights_ = std::move(avg_weights);
    step_count_ = step_count;
}

namespace {

class TupleSampler {
public:
    TupleSampler(const Mdp& mdp, const TabularPolicy& policy, SamplingMode mode, int burn_in,
                 RngStream& rng)
        : mdp_(mdp), mode_(mode) {
        policy.require_strictly_positive();
        if (mode_ == SamplingMode::kExactStationary) {
            const Eigen::VectorXd mu = stationary_distribution(mdp, policy);
            cdf_.resize(mu.size());
            double acc = 0.0;
            for (Eigen::Index i = 0; i < mu.size(); ++i) cdf_[i] = (acc += mu[i]);
        } else {
            chain_state_ = rng.categorical(mdp.initial_dist);
            for (int t = 0; t < burn_in; ++t) advance(policy, rng);
        }
    }

    std::pair<int, int> draw(const TabularPolicy& policy, RngStream& rng) {
        if (mode_ == SamplingMode::kExactStationary) {
            const int pair = rng.categorical_from_cdf(cdf_);
            return {pair / mdp_.n_actions, pair % mdp_.n_actions};
        }
        return advance(policy, rng);
    }

private:
    std::pair<int, int> advance(const TabularPolicy& policy, RngStream& rng) {
        const int s = chain_state_;
        const int a = rng.categorical(policy.probs.row(s).transpose());
        chain_state_ = rng.categorical(mdp_.transition.row(mdp_.pair_index(s, a)).transpose());
        return {s, a};
    }

    const Mdp& mdp_;
    SamplingMode mode_;
    Eigen::VectorXd cdf_;
    int chain_state_ = 0;
};

}  // namespace

TwoLayerNet run_soft_q_learning(const Mdp& mdp, const FeatureMap& features,
                                const TabularPolicy& exploration_policy,
                                const TwoLayerNet& reward_net, const SoftQLearningOptions& opts,
                                const TwoLayerNet& q_init, RngStream& rng) {
    if (opts.iterations < 1)
        throw ContractViolation("run_soft_q_learning: iterations must be >= 1");
    const double eta = opts.stepsize >= 0.0
                           ? opts.stepsize
                           : 1.0 / std::sqrt(static_cast<double>(opts.iterations));

    TupleSampler sampler(mdp, exploration_policy, opts.mode, opts.chain_burn_in, rng);
    SoftQLearner learner(q_init);

    if (opts.trace) *opts.trace << "t,delta,weight_distance,mspbe_estimate\n";
    for (long t = 0; t < opts.iterations; ++t) {
        const auto [s, a] = sampler.draw(exploration_policy, rng);
        TdSample sample;
        sample.state = s;
        sample.action = a;
        sample.reward_value = reward_net.forward(features(s, a));
        sample.next_state =
            rng.categorical(mdp.transition.row(mdp.pair_index(s, a)).transpose());
        const double delta =
            learner.td_step(reward_net, sample, eta, mdp.discount, features);

        if (opts.trace && t % opts.trace_stride == 0) {
            const double mspbe_estimate =
                opts.mspbe_fn ? opts.mspbe_fn(learner.q_net())
                              : std::numeric_limits<double>::quiet_NaN();
            *opts.trace << t << ',' << delta << ','
                        << learner.q_net().distance_from_init() << ',' << mspbe_estimate
                        << '\n';
        }
    }
    return learner.averaged_net();
}

}  // namespace mlirl
