#pragma once

#include <Eigen/Core>

#include "mlirl/env.hpp"

namespace mlirl {

/// Soft action-value table Q(s, a) of an entropy-regularized MDP.
struct SoftQTable {
    Eigen::MatrixXd values;  // n_states x n_actions
};

/// Soft state-value table V(s).
struct SoftVTable {
    Eigen::VectorXd values;  // n_states
};

/// V(s) = log sum_a exp Q(s, a), computed with max-subtraction.
SoftVTable logsumexp_value(const SoftQTable& q);

/// pi(a|s) = exp(Q(s,a) - V(s)); strictly positive rows summing to 1.
TabularPolicy boltzmann_policy(const SoftQTable& q);

/// Soft Bellman optimality backup:
/// (TQ)(s,a) = r(s,a) + gamma sum_{s'} P(s'|s,a) logsumexp_{a'} Q(s',a').
SoftQTable soft_bellman_optimality_operator(const Mdp& mdp,
                                            const Eigen::Ref<const RowMatrixXd>& reward,
                                            const SoftQTable& q);

struct SoftSolution {
    SoftQTable q;
    SoftVTable v;
    TabularPolicy policy;
    long iterations = 0;
    double residual = 0.0;  // ||TQ - Q||_inf of the last accepted iterate
};

/// Iterates the soft Bellman optimality operator until the iterate residual
/// guarantees ||Q - Q*||_inf <= tol (stopping at residual tol*(1-gamma)/gamma
/// and returning the post-backup iterate). Throws ConvergenceError when the
/// iteration cap is exceeded.
SoftSolution solve_soft_optimal(const Mdp& mdp, const Eigen::Ref<const RowMatrixXd>& reward,
                                double tol, long max_iterations = 1000000);

/// Exact Q^soft of a fixed strictly positive policy via the linear
/// policy-evaluation system with entropy bonus.
SoftQTable soft_q_of_policy(const Mdp& mdp, const Eigen::Ref<const RowMatrixXd>& reward,
                            const TabularPolicy& policy);

/// One round of soft policy iteration: Boltzmann policy of Q^soft_{r,pi}.
TabularPolicy soft_policy_iteration_step(const Mdp& mdp,
                                         const Eigen::Ref<const RowMatrixXd>& reward,
                                         const TabularPolicy& policy);

/// Entropy of the policy's action distribution at one state, in
/// [0, log n_actions].
double entropy(const TabularPolicy& policy, int state);

/// Soft state values of a fixed policy (the entropy-regularized
/// policy-evaluation solution used by soft_q_of_policy).
SoftVTable soft_v_of_policy(const Mdp& mdp, const Eigen::Ref<const RowMatrixXd>& reward,
                            const TabularPolicy& policy);

}  // namespace mlirl
