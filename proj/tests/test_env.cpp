#include <doctest.h>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "mlirl/env.hpp"
#include "mlirl/errors.hpp"
#include "test_util.hpp"

using namespace mlirl;

TEST_CASE("gridworld: deterministic right move on a 1x2 grid") {
    RngStream rng(7);
    auto [mdp, features] = build_gridworld(1, 2, 0.0, 0.9, 4, rng);
    CHECK(mdp.n_states == 2);
    CHECK(mdp.n_actions == 4);
    const auto row = mdp.transition.row(mdp.pair_index(0, grid_action::kRight));
    CHECK(row(1) == doctest::Approx(1.0));
    CHECK(row(0) == doctest::Approx(0.0));
    // Moving up or down off a 1-row grid bounces back.
    CHECK(mdp.transition(mdp.pair_index(0, grid_action::kUp), 0) == doctest::Approx(1.0));
}

TEST_CASE("gridworld: stochastic rows sum to one") {
    RngStream rng(1);
    auto [mdp, features] = build_gridworld(3, 3, 0.1, 0.9, 8, rng);
    for (int i = 0; i < mdp.n_pairs(); ++i)
        CHECK(std::abs(mdp.transition.row(i).sum() - 1.0) <= 1e-12);
    CHECK(mdp.true_reward(mdp.n_states - 1, 0) == kGridworldGoalReward);
}

TEST_CASE("gridworld: seeded determinism") {
    RngStream rng_a(11), rng_b(11);
    auto [mdp_a, feat_a] = build_gridworld(5, 5, 0.1, 0.9, 16, rng_a);
    auto [mdp_b, feat_b] = build_gridworld(5, 5, 0.1, 0.9, 16, rng_b);
    CHECK(mdp_a.transition == mdp_b.transition);
    CHECK(feat_a.table == feat_b.table);
}

TEST_CASE("gridworld: invalid parameters") {
    RngStream rng(0);
    CHECK_THROWS_AS(build_gridworld(1, 1, 0.0, 0.9, 4, rng), ConfigError);
    CHECK_THROWS_AS(build_gridworld(2, 2, 1.0, 0.9, 4, rng), ConfigError);
    CHECK_THROWS_AS(build_gridworld(2, 2, 0.1, 0.9, 2, rng), ConfigError);
}

TEST_CASE("random mdp: Dirichlet support and unit features") {
    RngStream rng(3);
    auto [mdp, features] = build_random_mdp(2, 2, 4, 1.0, 0.9, rng);
    CHECK(mdp.transition.minCoeff() > 0.0);

    RngStream rng2(3);
    auto [mdp2, features2] = build_random_mdp(5, 3, 8, 1.0, 0.9, rng2);
    for (int i = 0; i < mdp2.n_pairs(); ++i)
        CHECK(std::abs(features2.table.row(i).norm() - 1.0) <= 1e-12);

    RngStream rng3(0);
    CHECK_THROWS_AS(build_random_mdp(3, 2, 2, 1.0, 0.9, rng3), ConfigError);
}

TEST_CASE("random mdp: unique stationary distribution (eigensolve oracle)") {
    RngStream rng(9);
    auto [mdp, features] = build_random_mdp(10, 4, 16, 0.5, 0.9, rng);
    const TabularPolicy uniform = TabularPolicy::uniform(10, 4);
    const Eigen::MatrixXd chain = induced_state_chain(mdp, uniform);

    Eigen::EigenSolver<Eigen::MatrixXd> solver(chain.transpose());
    int near_one = 0;
    Eigen::VectorXd principal;
    for (int i = 0; i < 10; ++i) {
        if (std::abs(solver.eigenvalues()[i] - std::complex<double>(1.0, 0.0)) < 1e-9) {
            ++near_one;
            principal = solver.eigenvectors().col(i).real();
        }
    }
    CHECK(near_one == 1);  // unique stationary distribution

    principal /= principal.sum();
    const Eigen::VectorXd mu = stationary_distribution(mdp, uniform);
    for (int s = 0; s < 10; ++s) {
        double state_mass = 0.0;
        for (int a = 0; a < 4; ++a) state_mass += mu[mdp.pair_index(s, a)];
        CHECK(state_mass == doctest::Approx(principal[s]).epsilon(1e-9));
    }
}

TEST_CASE("stationary distribution: doubly stochastic symmetry") {
    Eigen::VectorXd half(2);
    half << 0.5, 0.5;
    const Mdp mdp = testing::make_flat_mdp(2, 2, half, 0.9);
    const Eigen::VectorXd mu = stationary_distribution(mdp, TabularPolicy::uniform(2, 2));
    for (int i = 0; i < 4; ++i) CHECK(mu[i] == doctest::Approx(0.25));
}

TEST_CASE("stationary distribution: degenerate single-state chain") {
    const Mdp mdp = testing::make_single_state_mdp(3, 0.9, 0.0);
    TabularPolicy policy;
    policy.probs.resize(1, 3);
    policy.probs << 0.2, 0.5, 0.3;
    const Eigen::VectorXd mu = stationary_distribution(mdp, policy);
    CHECK(mu[0] == doctest::Approx(0.2));
    CHECK(mu[1] == doctest::Approx(0.5));
    CHECK(mu[2] == doctest::Approx(0.3));
}

TEST_CASE("stationary distribution: matches state-action eigenvector oracle") {
    RngStream rng(17);
    auto [mdp, features] = build_random_mdp(5, 3, 8, 1.0, 0.9, rng);
    const TabularPolicy uniform = TabularPolicy::uniform(5, 3);

    // Dense state-action chain M[(s,a),(s',a')] = P(s'|s,a) pi(a'|s').
    const int n = mdp.n_pairs();
    Eigen::MatrixXd sa_chain(n, n);
    for (int i = 0; i < n; ++i)
        for (int s2 = 0; s2 < 5; ++s2)
            for (int a2 = 0; a2 < 3; ++a2)
                sa_chain(i, mdp.pair_index(s2, a2)) =
                    mdp.transition(i, s2) * uniform.probs(s2, a2);

    Eigen::EigenSolver<Eigen::MatrixXd> solver(sa_chain.transpose());
    Eigen::VectorXd principal;
    double best = 1e9;
    for (int i = 0; i < n; ++i) {
        const double dist = std::abs(solver.eigenvalues()[i] - std::complex<double>(1.0, 0.0));
        if (dist < best) {
            best = dist;
            principal = solver.eigenvectors().col(i).real();
        }
    }
    REQUIRE(best < 1e-10);
    principal /= principal.sum();

    const Eigen::VectorXd mu = stationary_distribution(mdp, uniform);
    CHECK((mu - principal).cwiseAbs().maxCoeff() < 1e-10);
    // Fixed-point invariant on the state-action chain.
    CHECK((sa_chain.transpose() * mu - mu).cwiseAbs().sum() <= 1e-10);
}

TEST_CASE("stationary distribution: reducible chain names the absorbing class") {
    Mdp mdp;
    mdp.n_states = 2;
    mdp.n_actions = 1;
    mdp.discount = 0.9;
    mdp.transition.resize(2, 2);
    mdp.transition << 0.0, 1.0,  // state 0 -> state 1
        0.0, 1.0;                // state 1 absorbing
    mdp.initial_dist = Eigen::VectorXd::Constant(2, 0.5);
    mdp.true_reward = RowMatrixXd::Zero(2, 1);
    mdp.validate();

    try {
        stationary_distribution(mdp, TabularPolicy::uniform(2, 1));
        FAIL("expected DiagnosticError");
    } catch (const DiagnosticError& e) {
        CHECK(std::string(e.what()).find("absorbing class {1}") != std::string::npos);
    }
}

TEST_CASE("occupancy measure: degenerate single-state MDP") {
    const Mdp mdp = testing::make_single_state_mdp(2, 0.9, 0.0);
    TabularPolicy policy;
    policy.probs.resize(1, 2);
    policy.probs << 0.7, 0.3;
    const Eigen::VectorXd d = occupancy_measure(mdp, policy);
    CHECK(d[0] == doctest::Approx(0.7));
    CHECK(d[1] == doctest::Approx(0.3));
}

TEST_CASE("occupancy measure: gamma -> 0 limit is mu0 times policy") {
    RngStream rng(5);
    auto [mdp, features] = build_random_mdp(4, 2, 4, 1.0, 0.9, rng);
    mdp.discount = 1e-12;
    const TabularPolicy uniform = TabularPolicy::uniform(4, 2);
    const Eigen::VectorXd d = occupancy_measure(mdp, uniform);
    for (int s = 0; s < 4; ++s)
        for (int a = 0; a < 2; ++a)
            CHECK(d[mdp.pair_index(s, a)] ==
                  doctest::Approx(mdp.initial_dist[s] * 0.5).epsilon(1e-9));
}

TEST_CASE("occupancy measure: Monte-Carlo oracle on the 1x2 gridworld") {
    RngStream rng(2);
    auto [mdp, features] = build_gridworld(1, 2, 0.0, 0.9, 4, rng);
    TabularPolicy policy;  // always move right
    policy.probs = RowMatrixXd::Zero(2, 4);
    policy.probs(0, grid_action::kRight) = 1.0;
    policy.probs(1, grid_action::kRight) = 1.0;

    const Eigen::VectorXd d = occupancy_measure(mdp, policy);

    // Geometric-horizon rollouts: T ~ Geom(1-gamma), record (s_T, a_T).
    RngStream mc(123);
    Eigen::VectorXd histogram = Eigen::VectorXd::Zero(mdp.n_pairs());
    const int n_rollouts = 1000000;
    for (int i = 0; i < n_rollouts; ++i) {
        int depth = 0;
        while (mc.uniform() < mdp.discount) ++depth;
        int s = mc.categorical(mdp.initial_dist);
        int a = 0;
        for (int t = 0;; ++t) {
            a = mc.categorical(policy.probs.row(s).transpose());
            if (t == depth) break;
            s = mc.categorical(mdp.transition.row(mdp.pair_index(s, a)).transpose());
        }
        histogram[mdp.pair_index(s, a)] += 1.0;
    }
    histogram /= static_cast<double>(n_rollouts);
    CHECK((histogram - d).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("occupancy measure: normalization and partial-sum consistency") {
    RngStream rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        auto [mdp, features] = build_random_mdp(3 + trial % 4, 2 + trial % 3, 5, 0.8, 0.9, rng);
        TabularPolicy policy = TabularPolicy::uniform(mdp.n_states, mdp.n_actions);
        const Eigen::VectorXd d = occupancy_measure(mdp, policy);
        CHECK(d.minCoeff() >= 0.0);
        CHECK(std::abs(d.sum() - 1.0) <= 1e-10);

        // (1-gamma) sum_{t<=T} gamma^t (t-step distribution) differs from d
        // by at most gamma^{T+1}.
        const Eigen::MatrixXd chain = induced_state_chain(mdp, policy);
        Eigen::VectorXd state_dist = mdp.initial_dist;
        Eigen::VectorXd partial = Eigen::VectorXd::Zero(mdp.n_pairs());
        const int truncation = 25;
        double weight = 1.0 - mdp.discount;
        for (int t = 0; t <= truncation; ++t) {
            for (int s = 0; s < mdp.n_states; ++s)
                for (int a = 0; a < mdp.n_actions; ++a)
                    partial[mdp.pair_index(s, a)] += weight * state_dist[s] * policy.probs(s, a);
            state_dist = chain.transpose() * state_dist;
            weight *= mdp.discount;
        }
        CHECK((d - partial).cwiseAbs().sum() <=
              std::pow(mdp.discount, truncation + 1) + 1e-12);
    }
}

TEST_CASE("sample trajectory: deterministic chain and unit horizon") {
    RngStream env_rng(2);
    auto [mdp, features] = build_gridworld(1, 2, 0.0, 0.9, 4, env_rng);
    mdp.initial_dist << 1.0, 0.0;
    TabularPolicy policy;
    policy.probs = RowMatrixXd::Zero(2, 4);
    policy.probs(0, grid_action::kRight) = 1.0;
    policy.probs(1, grid_action::kLeft) = 1.0;

    RngStream rng_a(1), rng_b(999);
    const Trajectory t1 = sample_trajectory(mdp, policy, 5, rng_a);
    const Trajectory t2 = sample_trajectory(mdp, policy, 5, rng_b);
    CHECK(t1.states == t2.states);
    CHECK(t1.actions == t2.actions);
    CHECK(t1.states == std::vector<int>{0, 1, 0, 1, 0});

    const Trajectory single = sample_trajectory(mdp, policy, 1, rng_a);
    CHECK(single.horizon() == 1);
    CHECK_THROWS_AS(sample_trajectory(mdp, policy, 0, rng_a), ContractViolation);
}

TEST_CASE("sample trajectory: one-step state distribution matches mu0 P_pi") {
    RngStream rng(44);
    auto [mdp, features] = build_random_mdp(4, 3, 5, 1.0, 0.9, rng);
    const TabularPolicy policy = TabularPolicy::uniform(4, 3);
    const Eigen::MatrixXd chain = induced_state_chain(mdp, policy);
    const Eigen::VectorXd expected = chain.transpose() * mdp.initial_dist;

    RngStream traj_rng(7);
    Eigen::VectorXd histogram = Eigen::VectorXd::Zero(4);
    const int n_traj = 100000;
    for (int i = 0; i < n_traj; ++i) {
        const Trajectory traj = sample_trajectory(mdp, policy, 2, traj_rng);
        histogram[traj.states[1]] += 1.0;
    }
    histogram /= static_cast<double>(n_traj);
    CHECK(0.5 * (histogram - expected).cwiseAbs().sum() < 1e-2);  // total variation
}

TEST_CASE("feature map: injectivity enforced") {
    RngStream rng(8);
    const Mdp mdp = testing::make_single_state_mdp(2, 0.9, 0.0);
    FeatureMap features = testing::make_features(mdp, 4, rng);
    features.table.row(1) = features.table.row(0);
    CHECK_THROWS_AS(features.validate(), ConfigError);
}

TEST_CASE("horizon_for_tail matches the geometric tail rule") {
    const int h = horizon_for_tail(0.9, 1e-3);
    CHECK(std::pow(0.9, h) / 0.1 <= 1e-3);
    CHECK(std::pow(0.9, h - 1) / 0.1 > 1e-3);
    CHECK(h == 88);
}

TEST_CASE("spectral gap audit lies in (0,1) for ergodic instances") {
    RngStream rng(21);
    auto [mdp, features] = build_random_mdp(6, 3, 5, 1.0, 0.9, rng);
    const double slem = second_eigenvalue_modulus(mdp, TabularPolicy::uniform(6, 3));
    CHECK(slem > 0.0);
    CHECK(slem < 1.0);
}
