#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "mlirl/demos.hpp"
#include "mlirl/env.hpp"
#include "mlirl/net.hpp"

namespace mlirl {

enum class LikelihoodMethod { kDirect, kReformulated };

/// Empirical discounted log-likelihood of the demos under the reward net's
/// induced optimal policy.
///
///   direct:        average over demos of sum_t gamma^t log pi_theta(a_t|s_t),
///                  with pi_theta solved exactly by the oracle.
///   reformulated:  average expert discounted reward minus the exact
///                  entropy-regularized return of pi_theta from mu0 (linear
///                  solves, no sampling).
///
/// The two agree up to the horizon-truncation tail of the demo sums plus the
/// per-trajectory transition-noise term, which vanishes on deterministic
/// chains.
double empirical_likelihood(const Mdp& mdp, const FeatureMap& features, const DemoDataset& demos,
                            const TwoLayerNet& reward_net, LikelihoodMethod method);

/// Exact gradient of the likelihood: expert-count-weighted reward gradients
/// minus the (1/(1-gamma))-scaled occupancy-weighted reward gradients of the
/// oracle policy pi_theta. No trajectory sampling enters.
Eigen::VectorXd likelihood_gradient_exact(const Mdp& mdp, const FeatureMap& features,
                                          const DemoDataset& demos,
                                          const TwoLayerNet& reward_net);

/// Same with an explicit expert weighting over (s, a) in place of the demo
/// counts (e.g. an exact occupancy scaled by 1/(1-gamma) for stationarity
/// checks).
Eigen::VectorXd likelihood_gradient_from_counts(const Mdp& mdp, const FeatureMap& features,
                                                const Eigen::Ref<const Eigen::VectorXd>& counts,
                                                const TwoLayerNet& reward_net);

/// Saddle objective L(theta, pi): average expert discounted reward minus the
/// exact entropy-regularized return of the given policy, by linear solves.
double saddle_objective(const Mdp& mdp, const FeatureMap& features, const DemoDataset& demos,
                        const TwoLayerNet& reward_net, const TabularPolicy& policy);

/// max over (s, a) of |log p1(a|s) - log p2(a|s)|.
double policy_log_gap(const TabularPolicy& p1, const TabularPolicy& p2);

struct ConcavityReport {
    int pairs = 0;
    int positive = 0;              // pairs with strictly positive violation
    double max_violation = 0.0;    // max over pairs of max(v, 0)
    double mean_positive = 0.0;    // mean of positive parts
    double median_positive = 0.0;  // median of positive parts (0 if none)
};

/// First-order concavity check of the saddle objective in the reward
/// parameter: for random weight pairs within a test ball around the current
/// parameters, reports statistics of
///   max(0, L(theta', pi) - L(theta, pi) - grad L(theta, pi)' (theta'-theta)).
/// With `linearized` set, the anchored linear reward replaces the net and the
/// violation is zero up to roundoff.
ConcavityReport concavity_diagnostic(const Mdp& mdp, const FeatureMap& features,
                                     const DemoDataset& demos, const TwoLayerNet& reward_net,
                                     const TabularPolicy& policy, int n_pairs, RngStream& rng,
                                     double ball_radius = 1.0, bool linearized = false);

/// ceil(2 ln(2/delta) / (epsilon^2 m^2 (1-gamma)^2)): expert trajectories
/// sufficient for an epsilon optimality gap with probability 1 - delta.
std::int64_t hoeffding_sample_bound(double epsilon, double delta, int width, double discount);

/// Mean squared projected Bellman error of the anchored linearized Q head
/// under the given state-action distribution. The Bellman backup target is
/// projected onto the span of the anchored features by mu-weighted least
/// squares (Gram solve with a 1e-10 ridge when degenerate).
double mspbe(const Mdp& mdp, const FeatureMap& features,
             const Eigen::Ref<const Eigen::VectorXd>& distribution, const TwoLayerNet& q_net,
             const TwoLayerNet& reward_net);

/// Per-iteration convergence metrics of a bi-level IRL run.
struct DiagnosticsRecord {
    long iteration = 0;
    double policy_log_gap = 0.0;  // ||log pi_{k+1} - log pi_{theta_k}||_inf
    double grad_norm_sq = 0.0;    // ||grad L(theta_k)||^2
    double likelihood = 0.0;      // L(theta_k), reformulated form
    double saddle_value = 0.0;    // L(theta_k, pi_{k+1})
    double saddle_gap = 0.0;      // saddle_value - likelihood (>= 0)
    double td_residual = 0.0;     // |delta_k| of the latest TD step
    double eta = 0.0;
    double alpha = 0.0;
};

}  // namespace mlirl
