#include <doctest.h>

#include <cmath>

#include "mlirl/env.hpp"
#include "mlirl/errors.hpp"
#include "mlirl/net.hpp"
#include "test_util.hpp"

using namespace mlirl;

namespace {

Eigen::RowVectorXd random_unit(int dim, RngStream& rng) {
    Eigen::RowVectorXd x(dim);
    for (int i = 0; i < dim; ++i) x[i] = rng.normal();
    return x / x.norm();
}

// Straightforward re-implementation used as the duplicate oracle.
double naive_forward(const TwoLayerNet& net, const Eigen::RowVectorXd& x) {
    double sum = 0.0;
    for (int j = 0; j < net.width(); ++j) {
        double pre = 0.0;
        for (int i = 0; i < net.dim(); ++i) pre += net.weights()(j, i) * x[i];
        if (pre > 0.0) sum += net.signs()[j] * pre;
    }
    return sum / net.width();
}

}  // namespace

TEST_CASE("init: seeded determinism and frozen snapshot") {
    RngStream a(5), b(5);
    const TwoLayerNet net_a = TwoLayerNet::init(8, 6, 1.0, a);
    const TwoLayerNet net_b = TwoLayerNet::init(8, 6, 1.0, b);
    CHECK(net_a.weights() == net_b.weights());
    CHECK(net_a.signs() == net_b.signs());
    CHECK(net_a.weights() == net_a.init_weights());
    CHECK(net_a.distance_from_init() == 0.0);
}

TEST_CASE("init: row norms have unit mean square (chi-square oracle)") {
    RngStream rng(29);
    const TwoLayerNet net = TwoLayerNet::init(10000, 16, 1.0, rng);
    double mean_sq = 0.0;
    for (int j = 0; j < net.width(); ++j) mean_sq += net.init_weights().row(j).squaredNorm();
    mean_sq /= net.width();
    CHECK(mean_sq == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("forward: sign cancellation and aligned row") {
    Eigen::VectorXd signs(2);
    signs << 1.0, -1.0;
    RowMatrixXd w(2, 4);
    w.row(0) << 0.3, -0.1, 0.7, 0.2;
    w.row(1) = w.row(0);
    const TwoLayerNet cancel(signs, w, 1.0);
    RngStream rng(1);
    for (int i = 0; i < 20; ++i)
        CHECK(cancel.forward(random_unit(4, rng)) == doctest::Approx(0.0).epsilon(1e-15));

    Eigen::RowVectorXd x = random_unit(4, rng);
    Eigen::VectorXd one_sign(1);
    one_sign << 1.0;
    RowMatrixXd aligned(1, 4);
    aligned.row(0) = x;
    const TwoLayerNet single(one_sign, aligned, 1.0);
    CHECK(single.forward(x) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("forward: rejects non-unit inputs") {
    RngStream rng(3);
    const TwoLayerNet net = TwoLayerNet::init(4, 4, 1.0, rng);
    Eigen::RowVectorXd x = Eigen::RowVectorXd::Zero(4);
    x[0] = 2.0;
    CHECK_THROWS_AS(net.forward(x), ContractViolation);
}

TEST_CASE("forward: duplicate-implementation oracle") {
    RngStream rng(101);
    for (int trial = 0; trial < 50; ++trial) {
        TwoLayerNet net = TwoLayerNet::init(1 + trial % 32, 3 + trial % 8, 1.0, rng);
        RowMatrixXd moved = net.weights();
        for (Eigen::Index j = 0; j < moved.rows(); ++j)
            for (Eigen::Index i = 0; i < moved.cols(); ++i) moved(j, i) += 0.2 * rng.normal();
        net.set_weights(net.project_ball(moved));
        const Eigen::RowVectorXd x = random_unit(net.dim(), rng);
        CHECK(net.forward(x) == doctest::Approx(naive_forward(net, x)).epsilon(1e-13));
    }
}

TEST_CASE("grad_weights: inactive rows vanish, norm bound 1/sqrt(m)") {
    RngStream rng(9);
    SUBCASE("all rows inactive gives the zero gradient") {
        Eigen::VectorXd signs(3);
        signs << 1.0, -1.0, 1.0;
        Eigen::RowVectorXd x(4);
        x << 1.0, 0.0, 0.0, 0.0;
        RowMatrixXd w(3, 4);
        w.setZero();
        w.col(0).setConstant(-1.0);  // every pre-activation is -1
        const TwoLayerNet net(signs, w, 1.0);
        CHECK(net.grad_weights(x).norm() == 0.0);
    }
    SUBCASE("norm bound over random nets") {
        for (int trial = 0; trial < 200; ++trial) {
            const int m = 1 + trial % 64;
            TwoLayerNet net = TwoLayerNet::init(m, 5, 1.0, rng);
            const Eigen::RowVectorXd x = random_unit(5, rng);
            CHECK(net.grad_weights(x).norm() <= 1.0 / std::sqrt(static_cast<double>(m)) + 1e-12);
        }
    }
}

TEST_CASE("grad_weights: central finite differences away from kinks") {
    RngStream rng(55);
    int checked = 0;
    while (checked < 20) {
        TwoLayerNet net = TwoLayerNet::init(16, 6, 10.0, rng);
        const Eigen::RowVectorXd x = random_unit(6, rng);
        // Skip points where any activation is within 1e-3 of flipping.
        if ((net.weights() * x.transpose()).cwiseAbs().minCoeff() < 1e-3) continue;
        ++checked;

        const Eigen::VectorXd grad = net.grad_weights(x);
        RowMatrixXd direction(16, 6);
        for (int j = 0; j < 16; ++j)
            for (int i = 0; i < 6; ++i) direction(j, i) = rng.normal();
        direction /= direction.norm();

        const double step = 1e-6;
        TwoLayerNet plus = net, minus = net;
        plus.set_weights(net.weights() + step * direction);
        minus.set_weights(net.weights() - step * direction);
        const double fd = (plus.forward(x) - minus.forward(x)) / (2.0 * step);
        const double analytic =
            grad.dot(Eigen::Map<const Eigen::VectorXd>(direction.data(), direction.size()));
        CHECK(fd == doctest::Approx(analytic).epsilon(1e-5));
    }
}

TEST_CASE("linearized_forward: agreement at init and exact linearity") {
    RngStream rng(81);
    TwoLayerNet net = TwoLayerNet::init(32, 5, 1.0, rng);
    const Eigen::RowVectorXd x = random_unit(5, rng);
    CHECK(net.linearized_forward(x) == doctest::Approx(net.forward(x)).epsilon(1e-15));

    // Exactly linear in the weight argument.
    RowMatrixXd w1 = net.init_weights(), w2 = net.init_weights();
    for (Eigen::Index j = 0; j < w1.rows(); ++j)
        for (Eigen::Index i = 0; i < w1.cols(); ++i) {
            w1(j, i) += rng.normal();
            w2(j, i) += rng.normal();
        }
    const double lambda = 0.37;
    TwoLayerNet at_w1 = net, at_w2 = net, at_mix = net;
    at_w1.set_weights(w1);
    at_w2.set_weights(w2);
    at_mix.set_weights(lambda * w1 + (1.0 - lambda) * w2);
    CHECK(at_mix.linearized_forward(x) ==
          doctest::Approx(lambda * at_w1.linearized_forward(x) +
                          (1.0 - lambda) * at_w2.linearized_forward(x))
              .epsilon(1e-12));
}

TEST_CASE("linearized_forward tracks forward inside a small ball") {
    RngStream rng(7);
    TwoLayerNet net = TwoLayerNet::init(4096, 8, 0.01, rng);
    RowMatrixXd moved(4096, 8);
    for (Eigen::Index j = 0; j < moved.rows(); ++j)
        for (Eigen::Index i = 0; i < moved.cols(); ++i) moved(j, i) = rng.normal();
    moved = net.init_weights() + 0.01 * moved / moved.norm();
    net.set_weights(moved);

    double total = 0.0;
    for (int i = 0; i < 100; ++i) {
        const Eigen::RowVectorXd x = random_unit(8, rng);
        total += std::abs(net.forward(x) - net.linearized_forward(x));
    }
    CHECK(total / 100.0 <= 1e-2);
}

TEST_CASE("anchored gradient is constant in the weights") {
    RngStream rng(63);
    TwoLayerNet net = TwoLayerNet::init(16, 5, 5.0, rng);
    const Mdp mdp = testing::make_single_state_mdp(3, 0.9, 0.0);
    const FeatureMap features = testing::make_features(mdp, 5, rng);
    Eigen::VectorXd coeffs(3);
    coeffs << 1.0, -0.5, 0.25;

    const Eigen::VectorXd anchored_before =
        weighted_grad_sum(net, features, coeffs, /*anchor_at_init=*/true);
    RowMatrixXd moved = net.weights();
    for (Eigen::Index j = 0; j < moved.rows(); ++j) moved(j, 0) += rng.normal();
    net.set_weights(moved);
    const Eigen::VectorXd anchored_after =
        weighted_grad_sum(net, features, coeffs, /*anchor_at_init=*/true);
    CHECK((anchored_before - anchored_after).norm() == 0.0);
}

TEST_CASE("project_ball: interior, radial scaling, idempotence, non-expansiveness") {
    RngStream rng(13);
    TwoLayerNet net = TwoLayerNet::init(8, 4, 2.0, rng);

    RowMatrixXd direction(8, 4);
    for (Eigen::Index j = 0; j < 8; ++j)
        for (Eigen::Index i = 0; i < 4; ++i) direction(j, i) = rng.normal();
    direction /= direction.norm();

    SUBCASE("interior points are unchanged") {
        const RowMatrixXd inside = net.init_weights() + 1.0 * direction;
        CHECK(net.project_ball(inside) == inside);
    }
    SUBCASE("exterior points project radially") {
        const RowMatrixXd outside = net.init_weights() + 4.0 * direction;
        const RowMatrixXd projected = net.project_ball(outside);
        CHECK((projected - (net.init_weights() + 2.0 * direction)).norm() <= 1e-12);
    }
    SUBCASE("idempotent and non-expansive") {
        for (int trial = 0; trial < 200; ++trial) {
            RowMatrixXd x(8, 4), y(8, 4);
            for (Eigen::Index j = 0; j < 8; ++j)
                for (Eigen::Index i = 0; i < 4; ++i) {
                    x(j, i) = net.init_weights()(j, i) + 3.0 * rng.normal();
                    y(j, i) = net.init_weights()(j, i) + 3.0 * rng.normal();
                }
            const RowMatrixXd px = net.project_ball(x);
            const RowMatrixXd py = net.project_ball(y);
            CHECK((net.project_ball(px) - px).norm() <= 1e-12);
            CHECK((px - py).norm() <= (x - y).norm() + 1e-12);
        }
    }
}

TEST_CASE("parameter-Lipschitz bound |f(W1,x) - f(W2,x)| <= ||W1-W2|| / sqrt(m)") {
    RngStream rng(37);
    for (int trial = 0; trial < 300; ++trial) {
        const int m = 1 + trial % 48;
        TwoLayerNet a = TwoLayerNet::init(m, 5, 100.0, rng);
        TwoLayerNet b = a;
        RowMatrixXd moved = a.weights();
        for (Eigen::Index j = 0; j < moved.rows(); ++j)
            for (Eigen::Index i = 0; i < moved.cols(); ++i) moved(j, i) += rng.normal();
        b.set_weights(moved);
        const Eigen::RowVectorXd x = random_unit(5, rng);
        const double lhs = std::abs(a.forward(x) - b.forward(x));
        const double rhs = (a.weights() - b.weights()).norm() / std::sqrt(m);
        CHECK(lhs <= rhs + 1e-12);
    }
}

TEST_CASE("discounted_feature_sum: unit horizon, geometric series, norm bound") {
    RngStream rng(71);
    const Mdp mdp = testing::make_single_state_mdp(2, 0.9, 0.0);
    const FeatureMap features = testing::make_features(mdp, 6, rng);
    TwoLayerNet net = TwoLayerNet::init(12, 6, 1.0, rng);

    SUBCASE("H = 1 is exactly the gradient at (s0, a0)") {
        Trajectory traj;
        traj.states = {0};
        traj.actions = {1};
        const Eigen::VectorXd sum = discounted_feature_sum(net, traj, 0.9, features);
        const Eigen::VectorXd grad = net.grad_weights(features(0, 1));
        CHECK((sum - grad).norm() <= 1e-15);
    }
    SUBCASE("repeated pair accumulates the geometric series") {
        Trajectory traj;
        const int horizon = 40;
        for (int t = 0; t < horizon; ++t) {
            traj.states.push_back(0);
            traj.actions.push_back(0);
        }
        const Eigen::VectorXd sum = discounted_feature_sum(net, traj, 0.9, features);
        const Eigen::VectorXd grad = net.grad_weights(features(0, 0));
        const double series = (1.0 - std::pow(0.9, horizon)) / 0.1;
        CHECK((sum - series * grad).norm() <= 1e-12);
    }
    SUBCASE("norm bound 1/(sqrt(m)(1-gamma)) holds for random trajectories") {
        RngStream traj_rng(4);
        for (int trial = 0; trial < 100; ++trial) {
            const Trajectory traj =
                sample_trajectory(mdp, TabularPolicy::uniform(1, 2), 60, traj_rng);
            const Eigen::VectorXd sum = discounted_feature_sum(net, traj, 0.9, features);
            CHECK(sum.norm() <= 1.0 / (std::sqrt(12.0) * 0.1) + 1e-12);
        }
    }
    SUBCASE("empty trajectory is rejected") {
        Trajectory empty;
        CHECK_THROWS_AS(discounted_feature_sum(net, empty, 0.9, features), ContractViolation);
    }
}
