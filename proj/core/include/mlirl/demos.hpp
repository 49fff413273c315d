#pragma once

#include <vector>

#include "mlirl/env.hpp"
#include "mlirl/rng.hpp"
#include "mlirl/soft_rl.hpp"

namespace mlirl {

/// Expert demonstrations plus the oracle policy and soft Q-table they were
/// sampled from (kept alongside for diagnostics only).
struct DemoDataset {
    std::vector<Trajectory> trajectories;
    TabularPolicy expert_policy;
    SoftQTable expert_q;
    int horizon = 0;
};

/// Solves the entropy-regularized MDP under the ground-truth reward and
/// samples n_traj trajectories of the given horizon from the soft-optimal
/// expert.
DemoDataset demo_dataset_generate(const Mdp& mdp, int n_traj, int horizon, RngStream& rng);

/// Uniform with replacement.
const Trajectory& sample_demo(const DemoDataset& demos, RngStream& rng);

/// Average over trajectories of sum_t gamma^t e_{(s_t, a_t)}, the empirical
/// discounted state-action counts that every exact likelihood quantity is
/// evaluated against. Sums to (1 - gamma^H) / (1 - gamma).
Eigen::VectorXd demo_discounted_counts(const DemoDataset& demos, double discount, int n_states,
                                       int n_actions);

}  // namespace mlirl
