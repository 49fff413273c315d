#include "mlirl/demos.hpp"

#include "mlirl/errors.hpp"

namespace mlirl {

DemoDataset demo_dataset_generate(const Mdp& mdp, int n_traj, int horizon, RngStream& rng) {
    if (n_traj < 1) throw ContractViolation("demo_dataset_generate: n_traj must be >= 1");
    if (horizon < 1) throw ContractViolation("demo_dataset_generate: horizon must be >= 1");

    const SoftSolution expert = solve_soft_optimal(mdp, mdp.true_reward, 1e-10);
    DemoDataset demos;
    demos.expert_policy = expert.policy;
    demos.expert_q = expert.q;
    demos.horizon = horizon;
    demos.trajectories.reserve(n_traj);
    for (int i = 0; i < n_traj; ++i)
        demos.trajectories.push_back(sample_trajectory(mdp, expert.policy, horizon, rng));
    return demos;
}

const Trajectory& sample_demo(const DemoDataset& demos, RngStream& rng) {
    if (demos.trajectories.empty()) throw ConfigError("sample_demo: empty demo dataset");
    return demos.trajectories[rng.uniform_int(static_cast<int>(demos.trajectories.size()))];
}

Eigen::VectorXd demo_discounted_counts(const DemoDataset& demos, double discount, int n_states,
                                       int n_actions) {
    if (demos.trajectories.empty())
        throw ConfigError("demo_discounted_counts: empty demo dataset");
    Eigen::VectorXd counts =
        Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_states) * n_actions);
    for (const Trajectory& traj : demos.trajectories) {
        double weight = 1.0;
        for (int t = 0; t < traj.horizon(); ++t) {
            counts[traj.states[t] * n_actions + traj.actions[t]] += weight;
            weight *= discount;
        }
    }
    return counts / static_cast<double>(demos.trajectories.size());
}

}  // namespace mlirl
