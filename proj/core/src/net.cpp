#include "mlirl/net.hpp"

#include <cmath>

#include "mlirl/errors.hpp"

namespace mlirl {

namespace {
void require_unit(const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    if (std::abs(x.norm() - 1.0) > 1e-6)
        throw ContractViolation("TwoLayerNet: input feature vector is not unit norm");
}
}  // namespace

TwoLayerNet::TwoLayerNet(Eigen::VectorXd signs, RowMatrixXd init_weights, double radius)
    : signs_(std::move(signs)), weights_(init_weights), init_weights_(std::move(init_weights)),
      radius_(radius) {
    if (radius_ <= 0.0) throw ConfigError("TwoLayerNet: radius must be positive");
    if (signs_.size() != init_weights_.rows())
        throw ConfigError("TwoLayerNet: signs / weight row count mismatch");
    if (init_weights_.cols() <= 2) throw ConfigError("TwoLayerNet: feature dim must exceed 2");
    for (Eigen::Index j = 0; j < signs_.size(); ++j)
        if (signs_[j] != 1.0 && signs_[j] != -1.0)
            throw ConfigError("TwoLayerNet: signs must be +1 or -1");
}

TwoLayerNet TwoLayerNet::init(int width, int dim, double radius, RngStream& rng) {
    if (width < 1) throw ConfigError("TwoLayerNet::init: width must be >= 1");
    if (dim <= 2) throw ConfigError("TwoLayerNet::init: dim must exceed 2");
    Eigen::VectorXd signs(width);
    for (int j = 0; j < width; ++j) signs[j] = rng.rademacher();
    RowMatrixXd w0(width, dim);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
    for (int j = 0; j < width; ++j)
        for (int i = 0; i < dim; ++i) w0(j, i) = scale * rng.normal();
    return TwoLayerNet(std::move(signs), std::move(w0), radius);
}

void TwoLayerNet::set_weights(RowMatrixXd weights) {
    if (weights.rows() != weights_.rows() || weights.cols() != weights_.cols())
        throw ConfigError("TwoLayerNet::set_weights: shape mismatch");
    weights_ = std::move(weights);
}

double TwoLayerNet::forward(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    require_unit(x);
    const Eigen::VectorXd pre = weights_ * x.transpose();
    return signs_.dot(pre.cwiseMax(0.0)) / width();
}

Eigen::VectorXd TwoLayerNet::grad_weights(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    require_unit(x);
    const int m = width();
    const int d = dim();
    const Eigen::VectorXd pre = weights_ * x.transpose();
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m) * d);
    for (int j = 0; j < m; ++j)
        if (pre[j] > 0.0) grad.segment(static_cast<Eigen::Index>(j) * d, d) =
            (signs_[j] / m) * x.transpose();
    return grad;
}

double TwoLayerNet::linearized_forward(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    require_unit(x);
    const Eigen::VectorXd pre0 = init_weights_ * x.transpose();
    const Eigen::VectorXd pre = weights_ * x.transpose();
    double out = 0.0;
    for (int j = 0; j < width(); ++j)
        if (pre0[j] > 0.0) out += signs_[j] * pre[j];
    return out / width();
}

RowMatrixXd TwoLayerNet::project_ball(const RowMatrixXd& candidate) const {
    const double dist = (candidate - init_weights_).norm();
    if (dist <= radius_) return candidate;
    return init_weights_ + (radius_ / dist) * (candidate - init_weights_);
}

namespace {

Eigen::MatrixXd table_from(const TwoLayerNet& net, const FeatureMap& features,
                           const RowMatrixXd& value_weights, const RowMatrixXd& gate_weights) {
    // pre(i, j) = W_j . x_i for every pair i; gate on gate_weights' sign.
    const Eigen::MatrixXd pre = features.table * value_weights.transpose();
    const Eigen::MatrixXd gate_pre = (&gate_weights == &value_weights)
                                         ? pre
                                         : Eigen::MatrixXd(features.table *
                                                           gate_weights.transpose());
    const Eigen::ArrayXXd gated = (gate_pre.array() > 0.0).cast<double>() * pre.array();
    const Eigen::VectorXd flat = (gated.matrix() * net.signs()) / net.width();
    Eigen::MatrixXd out(features.n_states, features.n_actions);
    for (int s = 0; s < features.n_states; ++s)
        for (int a = 0; a < features.n_actions; ++a)
            out(s, a) = flat[s * features.n_actions + a];
    return out;
}

}  // namespace

Eigen::MatrixXd forward_table(const TwoLayerNet& net, const FeatureMap& features) {
    return table_from(net, features, net.weights(), net.weights());
}

Eigen::MatrixXd linearized_forward_table(const TwoLayerNet& net, const FeatureMap& features) {
    return table_from(net, features, net.weights(), net.init_weights());
}

Eigen::MatrixXd forward_table_with(const TwoLayerNet& net, const RowMatrixXd& weights,
                                   const FeatureMap& features) {
    return table_from(net, features, weights, weights);
}

Eigen::VectorXd weighted_grad_sum(const TwoLayerNet& net, const FeatureMap& features,
                                  const Eigen::Ref<const Eigen::VectorXd>& coeffs,
                                  bool anchor_at_init) {
    const int m = net.width();
    const int d = net.dim();

    // G = sum_i c_i grad(x_i) reshaped to m x d:
    //   G(j, :) = (b_j / m) sum_i c_i 1{W_j . x_i > 0} x_i
    // computed as a masked GEMM over the pairs with nonzero coefficient.
    std::vector<Eigen::Index> active;
    for (Eigen::Index i = 0; i < coeffs.size(); ++i)
        if (coeffs[i] != 0.0) active.push_back(i);

    RowMatrixXd x(active.size(), d);
    Eigen::VectorXd c(active.size());
    for (size_t k = 0; k < active.size(); ++k) {
        x.row(static_cast<Eigen::Index>(k)) = features.table.row(active[k]);
        c[static_cast<Eigen::Index>(k)] = coeffs[active[k]];
    }

    const RowMatrixXd& gates = anchor_at_init ? net.init_weights() : net.weights();
    const Eigen::MatrixXd pre = gates * x.transpose();                // m x P
    const Eigen::ArrayXXd mask = (pre.array() > 0.0).cast<double>();  // m x P
    const Eigen::MatrixXd scaled = mask.matrix() * c.asDiagonal();    // m x P
    RowMatrixXd g = scaled * x;                                       // m x d
    g.array().colwise() *= (net.signs().array() / m);
    return Eigen::Map<Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(m) * d);
}

Eigen::VectorXd discounted_feature_sum(const TwoLayerNet& net, const Trajectory& traj,
                                       double discount, const FeatureMap& features) {
    if (traj.horizon() < 1)
        throw ContractViolation("discounted_feature_sum: trajectory is empty");
    Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(features.table.rows());
    double weight = 1.0;
    for (int t = 0; t < traj.horizon(); ++t) {
        coeffs[traj.states[t] * features.n_actions + traj.actions[t]] += weight;
        weight *= discount;
    }
    return weighted_grad_sum(net, features, coeffs);
}

}  // namespace mlirl
