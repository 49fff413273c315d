#pragma once

#include <Eigen/Core>
#include <utility>
#include <vector>

#include "mlirl/rng.hpp"

namespace mlirl {

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Finite discounted MDP. Transition rows are indexed by the flattened
/// state-action pair s * n_actions + a and hold P(s' | s, a).
/// The ground-truth reward is only used to generate expert data and to
/// evaluate learned rewards against it.
struct Mdp {
    int n_states = 0;
    int n_actions = 0;
    RowMatrixXd transition;        // (n_states * n_actions) x n_states
    Eigen::VectorXd initial_dist;  // n_states
    double discount = 0.0;
    RowMatrixXd true_reward;       // n_states x n_actions

    int pair_index(int state, int action) const { return state * n_actions + action; }
    int n_pairs() const { return n_states * n_actions; }

    /// Throws ConfigError if any invariant is broken (rows not stochastic,
    /// initial distribution not normalized, discount outside (0,1)).
    void validate() const;
};

/// Injective embedding psi(s, a) onto the unit sphere in R^dim, one row per
/// flattened state-action pair.
struct FeatureMap {
    int n_states = 0;
    int n_actions = 0;
    int dim = 0;
    RowMatrixXd table;  // (n_states * n_actions) x dim, unit-norm rows

    RowMatrixXd::ConstRowXpr operator()(int state, int action) const {
        return table.row(state * n_actions + action);
    }

    void validate() const;
};

/// Row-stochastic action distribution per state.
struct TabularPolicy {
    RowMatrixXd probs;  // n_states x n_actions

    int n_states() const { return static_cast<int>(probs.rows()); }
    int n_actions() const { return static_cast<int>(probs.cols()); }

    static TabularPolicy uniform(int n_states, int n_actions);

    void validate() const;
    /// Throws ContractViolation if any entry is not strictly positive.
    void require_strictly_positive() const;
};

/// A finite rollout: states[t], actions[t] for t = 0..horizon-1, where
/// states[t+1] was sampled from P(. | states[t], actions[t]).
struct Trajectory {
    std::vector<int> states;
    std::vector<int> actions;

    int horizon() const { return static_cast<int>(states.size()); }
    void validate(int n_states, int n_actions) const;
};

// Gridworld action indices (row-major grid, origin top-left).
namespace grid_action {
inline constexpr int kUp = 0;
inline constexpr int kDown = 1;
inline constexpr int kLeft = 2;
inline constexpr int kRight = 3;
}  // namespace grid_action

/// Reward granted in the goal cell (bottom-right) of generated gridworlds.
inline constexpr double kGridworldGoalReward = 5.0;

/// Four-action gridworld with slippery moves: the intended direction is taken
/// with probability 1 - slip_prob, otherwise one of the three other
/// directions uniformly. Off-grid moves bounce back. Feature rows are i.i.d.
/// Gaussian draws normalized to the unit sphere.
std::pair<Mdp, FeatureMap> build_gridworld(int rows, int cols, double slip_prob, double discount,
                                           int feature_dim, RngStream& rng);

/// Ergodic random MDP: transition rows drawn from Dirichlet(concentration),
/// so every entry is strictly positive and the chain mixes geometrically
/// under any policy. Ground-truth rewards are i.i.d. standard normal.
std::pair<Mdp, FeatureMap> build_random_mdp(int n_states, int n_actions, int feature_dim,
                                            double concentration, double discount, RngStream& rng);

/// Stationary distribution over (s, a) of the chain induced by the policy,
/// computed by direct linear solve. Throws DiagnosticError naming an
/// absorbing class when the induced state chain is reducible.
Eigen::VectorXd stationary_distribution(const Mdp& mdp, const TabularPolicy& policy);

/// Exact discounted occupancy d(s, a; pi) = (1-gamma) pi(a|s) sum_t gamma^t
/// P(s_t = s), via the linear solve (I - gamma P_pi^T) rho = (1-gamma) mu0.
Eigen::VectorXd occupancy_measure(const Mdp& mdp, const TabularPolicy& policy);

/// Rolls out exactly `horizon` steps: s0 ~ mu0, a_t ~ pi(.|s_t),
/// s_{t+1} ~ P(.|s_t, a_t).
Trajectory sample_trajectory(const Mdp& mdp, const TabularPolicy& policy, int horizon,
                             RngStream& rng);

/// Smallest H with gamma^H / (1 - gamma) <= tail_tol.
int horizon_for_tail(double discount, double tail_tol);

/// State-level transition matrix P_pi(s, s') = sum_a pi(a|s) P(s'|s,a).
Eigen::MatrixXd induced_state_chain(const Mdp& mdp, const TabularPolicy& policy);

/// Second-largest eigenvalue modulus of the induced state chain under the
/// given policy; the mixing audit emitted with each generated environment.
double second_eigenvalue_modulus(const Mdp& mdp, const TabularPolicy& policy);

/// Empirical minimum of |w' psi(s,a)| over random unit directions w and all
/// pairs; reported as a feature-regularity diagnostic, never a hard check.
double feature_regularity_diagnostic(const FeatureMap& features, int n_directions,
                                     RngStream& rng);

}  // namespace mlirl
