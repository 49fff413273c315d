#include "mlirl/likelihood.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "mlirl/errors.hpp"
#include "mlirl/soft_rl.hpp"

namespace mlirl {

namespace {
constexpr double kOracleTol = 1e-12;
}

double empirical_likelihood(const Mdp& mdp, const FeatureMap& features, const DemoDataset& demos,
                            const TwoLayerNet& reward_net, LikelihoodMethod method) {
    const Eigen::VectorXd counts =
        demo_discounted_counts(demos, mdp.discount, mdp.n_states, mdp.n_actions);
    const RowMatrixXd reward = forward_table(reward_net, features);
    const SoftSolution oracle = solve_soft_optimal(mdp, reward, kOracleTol);

    if (method == LikelihoodMethod::kDirect) {
        double value = 0.0;
        for (int i = 0; i < mdp.n_pairs(); ++i) {
            if (counts[i] == 0.0) continue;
            value += counts[i] *
                     std::log(oracle.policy.probs(i / mdp.n_actions, i % mdp.n_actions));
        }
        return value;
    }

    const double expert_reward =
        counts.dot(Eigen::Map<const Eigen::VectorXd>(reward.data(), reward.size()));
    return expert_reward - mdp.initial_dist.dot(oracle.v.values);
}

Eigen::VectorXd likelihood_gradient_from_counts(const Mdp& mdp, const FeatureMap& features,
                                                const Eigen::Ref<const Eigen::VectorXd>& counts,
                                                const TwoLayerNet& reward_net) {
    const RowMatrixXd reward = forward_table(reward_net, features);
    const SoftSolution oracle = solve_soft_optimal(mdp, reward, kOracleTol);
    const Eigen::VectorXd agent_occupancy = occupancy_measure(mdp, oracle.policy);
    const Eigen::VectorXd coeffs = counts - agent_occupancy / (1.0 - mdp.discount);
    return weighted_grad_sum(reward_net, features, coeffs);
}

Eigen::VectorXd likelihood_gradient_exact(const Mdp& mdp, const FeatureMap& features,
                                          const DemoDataset& demos,
                                          const TwoLayerNet& reward_net) {
    return likelihood_gradient_from_counts(
        mdp, features, demo_discounted_counts(demos, mdp.discount, mdp.n_states, mdp.n_actions),
        reward_net);
}

double saddle_objective(const Mdp& mdp, const FeatureMap& features, const DemoDataset& demos,
                        const TwoLayerNet& reward_net, const TabularPolicy& policy) {
    policy.require_strictly_positive();
    const Eigen::VectorXd counts =
        demo_discounted_counts(demos, mdp.discount, mdp.n_states, mdp.n_actions);
    const RowMatrixXd reward = forward_table(reward_net, features);
    const SoftVTable agent_value = soft_v_of_policy(mdp, reward, policy);
    const double expert_reward =
        counts.dot(Eigen::Map<const Eigen::VectorXd>(reward.data(), reward.size()));
    return expert_reward - mdp.initial_dist.dot(agent_value.values);
}

double policy_log_gap(const TabularPolicy& p1, const TabularPolicy& p2) {
    p1.require_strictly_positive();
    p2.require_strictly_positive();
    if (p1.probs.rows() != p2.probs.rows() || p1.probs.cols() != p2.probs.cols())
        throw ContractViolation("policy_log_gap: shape mismatch");
    return (p1.probs.array().log() - p2.probs.array().log()).abs().maxCoeff();
}

namespace {

RowMatrixXd random_ball_point(const RowMatrixXd& center, double radius, RngStream& rng) {
    RowMatrixXd direction(center.rows(), center.cols());
    for (Eigen::Index j = 0; j < center.rows(); ++j)
        for (Eigen::Index i = 0; i < center.cols(); ++i) direction(j, i) = rng.normal();
    direction /= direction.norm();
    return center + (radius * rng.uniform()) * direction;
}

}  // namespace

ConcavityReport concavity_diagnostic(const Mdp& mdp, const FeatureMap& features,
                                     const DemoDataset& demos, const TwoLayerNet& reward_net,
                                     const TabularPolicy& policy, int n_pairs, RngStream& rng,
                                     double ball_radius, bool linearized) {
    if (n_pairs < 1) throw ContractViolation("concavity_diagnostic: n_pairs must be >= 1");
    policy.require_strictly_positive();

    // With the policy fixed, the entropy term cancels between L(theta', pi)
    // and L(theta, pi); only the reward enters through the weighting
    //   w = expert counts - occupancy(pi) / (1-gamma).
    const Eigen::VectorXd counts =
        demo_discounted_counts(demos, mdp.discount, mdp.n_states, mdp.n_actions);
    const Eigen::VectorXd w =
        counts - occupancy_measure(mdp, policy) / (1.0 - mdp.discount);

    TwoLayerNet lhs = reward_net;
    TwoLayerNet rhs = reward_net;

    auto weighted_value = [&](const TwoLayerNet& net) {
        const Eigen::MatrixXd table =
            linearized ? linearized_forward_table(net, features) : forward_table(net, features);
        double value = 0.0;
        for (int i = 0; i < mdp.n_pairs(); ++i)
            value += w[i] * table(i / mdp.n_actions, i % mdp.n_actions);
        return value;
    };

    std::vector<double> positives;
    ConcavityReport report;
    report.pairs = n_pairs;
    for (int p = 0; p < n_pairs; ++p) {
        lhs.set_weights(random_ball_point(reward_net.weights(), ball_radius, rng));
        rhs.set_weights(random_ball_point(reward_net.weights(), ball_radius, rng));

        const Eigen::VectorXd grad = weighted_grad_sum(lhs, features, w, linearized);
        const RowMatrixXd diff = rhs.weights() - lhs.weights();
        const double first_order =
            grad.dot(Eigen::Map<const Eigen::VectorXd>(diff.data(), diff.size()));
        const double violation = weighted_value(rhs) - weighted_value(lhs) - first_order;
        if (violation > 0.0) {
            positives.push_back(violation);
            report.max_violation = std::max(report.max_violation, violation);
        }
    }

    report.positive = static_cast<int>(positives.size());
    if (!positives.empty()) {
        double sum = 0.0;
        for (double v : positives) sum += v;
        report.mean_positive = sum / static_cast<double>(positives.size());
        std::sort(positives.begin(), positives.end());
        const size_t mid = positives.size() / 2;
        report.median_positive = positives.size() % 2 == 1
                                     ? positives[mid]
                                     : 0.5 * (positives[mid - 1] + positives[mid]);
    }
    return report;
}

std::int64_t hoeffding_sample_bound(double epsilon, double delta, int width, double discount) {
    if (!(epsilon > 0.0 && epsilon < 1.0) || !(delta > 0.0 && delta < 1.0))
        throw ContractViolation("hoeffding_sample_bound: epsilon and delta must be in (0,1)");
    if (width < 1) throw ContractViolation("hoeffding_sample_bound: width must be >= 1");
    if (!(discount > 0.0 && discount < 1.0))
        throw ContractViolation("hoeffding_sample_bound: discount must be in (0,1)");
    const double m = static_cast<double>(width);
    const double value = 2.0 * std::log(2.0 / delta) /
                         (epsilon * epsilon * m * m * (1.0 - discount) * (1.0 - discount));
    const double ceiled = std::ceil(value);
    if (ceiled >= static_cast<double>(std::numeric_limits<std::int64_t>::max()))
        return std::numeric_limits<std::int64_t>::max();
    return static_cast<std::int64_t>(ceiled);
}

double mspbe(const Mdp& mdp, const FeatureMap& features,
             const Eigen::Ref<const Eigen::VectorXd>& distribution, const TwoLayerNet& q_net,
             const TwoLayerNet& reward_net) {
    const int n = mdp.n_pairs();
    if (distribution.size() != n) throw ContractViolation("mspbe: distribution has wrong size");
    if (distribution.minCoeff() < 0.0 || std::abs(distribution.sum() - 1.0) > 1e-9)
        throw ContractViolation("mspbe: distribution is not a probability vector");

    // Anchored linearized head: values, soft Bellman target, and the feature
    // Gram matrix K_il = Phi(x_i)' Phi(x_l) = (x_i . x_l)(#common active)/m^2.
    const Eigen::MatrixXd q = linearized_forward_table(q_net, features);
    Eigen::VectorXd q_flat(n);
    for (int i = 0; i < n; ++i) q_flat[i] = q(i / mdp.n_actions, i % mdp.n_actions);

    Eigen::VectorXd v(mdp.n_states);
    for (int s = 0; s < mdp.n_states; ++s) {
        const double peak = q.row(s).maxCoeff();
        v[s] = peak + std::log((q.row(s).array() - peak).exp().sum());
    }
    const Eigen::MatrixXd r_table = forward_table(reward_net, features);
    Eigen::VectorXd target = mdp.transition * v;
    for (int i = 0; i < n; ++i)
        target[i] = r_table(i / mdp.n_actions, i % mdp.n_actions) + mdp.discount * target[i];

    const Eigen::MatrixXd act =
        ((features.table * q_net.init_weights().transpose()).array() > 0.0)
            .cast<double>()
            .matrix();
    const double m = static_cast<double>(q_net.width());
    const Eigen::MatrixXd gram = (features.table * features.table.transpose())
                                     .cwiseProduct(act * act.transpose()) /
                                 (m * m);

    const Eigen::VectorXd half = distribution.cwiseSqrt();
    const Eigen::MatrixXd weighted_gram =
        half.asDiagonal() * gram * half.asDiagonal();
    constexpr double kRidge = 1e-10;
    const Eigen::MatrixXd system =
        weighted_gram + kRidge * Eigen::MatrixXd::Identity(n, n);
    const Eigen::VectorXd projected =
        weighted_gram * system.ldlt().solve(half.cwiseProduct(target));

    return (half.cwiseProduct(q_flat) - projected).squaredNorm();
}

}  // namespace mlirl
