#include "mlirl/soft_rl.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "mlirl/errors.hpp"

namespace mlirl {

SoftVTable logsumexp_value(const SoftQTable& q) {
    SoftVTable v;
    v.values.resize(q.values.rows());
    for (Eigen::Index s = 0; s < q.values.rows(); ++s) {
        const double peak = q.values.row(s).maxCoeff();
        v.values[s] = peak + std::log((q.values.row(s).array() - peak).exp().sum());
    }
    return v;
}

TabularPolicy boltzmann_policy(const SoftQTable& q) {
    const SoftVTable v = logsumexp_value(q);
    TabularPolicy pi;
    pi.probs = (q.values.colwise() - v.values).array().exp();
    // Per-row renormalization pins the 1e-12 row-sum invariant.
    for (Eigen::Index s = 0; s < pi.probs.rows(); ++s) pi.probs.row(s) /= pi.probs.row(s).sum();
    return pi;
}

SoftQTable soft_bellman_optimality_operator(const Mdp& mdp,
                                            const Eigen::Ref<const RowMatrixXd>& reward,
                                            const SoftQTable& q) {
    const SoftVTable v = logsumexp_value(q);
    const Eigen::VectorXd backup = mdp.transition * v.values;  // over (s,a) pairs
    SoftQTable out;
    out.values = reward + mdp.discount *
                              Eigen::Map<const RowMatrixXd>(backup.data(), mdp.n_states,
                                                            mdp.n_actions);
    return out;
}

SoftSolution solve_soft_optimal(const Mdp& mdp, const Eigen::Ref<const RowMatrixXd>& reward,
                                double tol, long max_iterations) {
    if (tol <= 0.0) throw ContractViolation("solve_soft_optimal: tol must be positive");
    const double gamma = mdp.discount;
    // Residual at this level converts to a true-error bound of tol for the
    // post-backup iterate via the contraction factor.
    const double residual_target = tol * (1.0 - gamma) / gamma;

    SoftQTable q{Eigen::MatrixXd::Zero(mdp.n_states, mdp.n_actions)};
    double residual = std::numeric_limits<double>::infinity();
    for (long it = 0; it < max_iterations; ++it) {
        SoftQTable next = soft_bellman_optimality_operator(mdp, reward, q);
        residual = (next.values - q.values).cwiseAbs().maxCoeff();
        q = std::move(next);
        if (residual <= residual_target) {
            SoftSolution sol;
            sol.q = std::move(q);
            sol.v = logsumexp_value(sol.q);
            sol.policy = boltzmann_policy(sol.q);
            sol.iterations = it + 1;
            sol.residual = residual;
            return sol;
        }
    }
    throw ConvergenceError("solve_soft_optimal: iteration cap exceeded", residual);
}

SoftVTable soft_v_of_policy(const Mdp& mdp, const Eigen::Ref<const RowMatrixXd>& reward,
                            const TabularPolicy& policy) {
    policy.require_strictly_positive();
    const int n = mdp.n_states;

    Eigen::VectorXd r_pi(n), h_pi(n);
    for (int s = 0; s < n; ++s) {
        r_pi[s] = policy.probs.row(s).dot(reward.row(s));
        h_pi[s] = entropy(policy, s);
    }
    const Eigen::MatrixXd chain = induced_state_chain(mdp, policy);
    const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - mdp.discount * chain;

    SoftVTable v;
    v.values = system.partialPivLu().solve(r_pi + h_pi);
    return v;
}

SoftQTable soft_q_of_policy(const Mdp& mdp, const Eigen::Ref<const RowMatrixXd>& reward,
                            const TabularPolicy& policy) {
    const SoftVTable v = soft_v_of_policy(mdp, reward, policy);
    const Eigen::VectorXd backup = mdp.transition * v.values;
    SoftQTable q;
    q.values = reward + mdp.discount *
                            Eigen::Map<const RowMatrixXd>(backup.data(), mdp.n_states,
                                                          mdp.n_actions);
    return q;
}

TabularPolicy soft_policy_iteration_step(const Mdp& mdp,
                                         const Eigen::Ref<const RowMatrixXd>& reward,
                                         const TabularPolicy& policy) {
    return boltzmann_policy(soft_q_of_policy(mdp, reward, policy));
}

double entropy(const TabularPolicy& policy, int state) {
    if (state < 0 || state >= policy.n_states())
        throw ContractViolation("entropy: state index out of range");
    const auto row = policy.probs.row(state);
    if (row.minCoeff() <= 0.0)
        throw ContractViolation("entropy: policy row has a zero entry");
    return -(row.array() * row.array().log()).sum();
}

}  // namespace mlirl
