#pragma once

#include <Eigen/Core>

#include "mlirl/env.hpp"
#include "mlirl/rng.hpp"

namespace mlirl {

/// Width-m two-layer ReLU network f(x) = (1/m) sum_j b_j max(0, W_j . x)
/// over unit feature vectors, shared by the reward and soft-Q heads.
/// Output-layer signs b and the initialization snapshot W0 are frozen at
/// construction; only the hidden weight matrix W trains. Gradients and the
/// anchored linearization are flattened row-major per hidden unit, so block j
/// of a flat vector is rows [j*d, (j+1)*d).
class TwoLayerNet {
public:
    TwoLayerNet(Eigen::VectorXd signs, RowMatrixXd init_weights, double radius);

    /// Fresh net: b_j i.i.d. Rademacher, W0 rows i.i.d. N(0, I_d / d),
    /// current weights equal to W0.
    static TwoLayerNet init(int width, int dim, double radius, RngStream& rng);

    int width() const { return static_cast<int>(weights_.rows()); }
    int dim() const { return static_cast<int>(weights_.cols()); }
    double radius() const { return radius_; }
    const Eigen::VectorXd& signs() const { return signs_; }
    const RowMatrixXd& weights() const { return weights_; }
    const RowMatrixXd& init_weights() const { return init_weights_; }

    void set_weights(RowMatrixXd weights);
    double distance_from_init() const { return (weights_ - init_weights_).norm(); }

    /// (1/m) sum_j b_j relu(W_j . x). Throws ContractViolation unless x is
    /// unit norm.
    double forward(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;

    /// Flat gradient w.r.t. W: block j is (b_j/m) 1{W_j . x > 0} x, with the
    /// indicator taken as 0 exactly at 0.
    Eigen::VectorXd grad_weights(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;

    /// Anchored linearization Phi(x)' W: activation indicators frozen at the
    /// initialization snapshot, exactly linear in the current weights.
    double linearized_forward(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;

    /// Euclidean projection of a candidate weight matrix onto the ball
    /// S_B = {W : ||W - W0||_2 <= B} (Frobenius norm on the flattened
    /// md-vector).
    RowMatrixXd project_ball(const RowMatrixXd& candidate) const;

private:
    Eigen::VectorXd signs_;
    RowMatrixXd weights_;
    RowMatrixXd init_weights_;
    double radius_;
};

/// Net outputs on every state-action pair of a feature table, as an
/// n_states x n_actions matrix. One GEMM instead of SA forward calls.
Eigen::MatrixXd forward_table(const TwoLayerNet& net, const FeatureMap& features);

/// As forward_table but through the anchored linearization.
Eigen::MatrixXd linearized_forward_table(const TwoLayerNet& net, const FeatureMap& features);

/// forward_table evaluated at an explicit weight matrix (same signs and
/// shape), without copying the net.
Eigen::MatrixXd forward_table_with(const TwoLayerNet& net, const RowMatrixXd& weights,
                                   const FeatureMap& features);

/// sum_t gamma^t grad_weights(psi(s_t, a_t)) over a trajectory, flattened.
/// Truncation bias of the infinite sum is bounded by gamma^H / (sqrt(m)(1-gamma)).
Eigen::VectorXd discounted_feature_sum(const TwoLayerNet& net, const Trajectory& traj,
                                       double discount, const FeatureMap& features);

/// Flat gradient accumulation sum_i coeffs[i] * grad_weights(psi_row[i]) over
/// all state-action pairs; shared kernel for feature sums and exact
/// likelihood gradients. With anchor_at_init the activation gates come from
/// the initialization snapshot (the gradient of the linearized net, constant
/// in the weights).
Eigen::VectorXd weighted_grad_sum(const TwoLayerNet& net, const FeatureMap& features,
                                  const Eigen::Ref<const Eigen::VectorXd>& coeffs,
                                  bool anchor_at_init = false);

}  // namespace mlirl
