#include <doctest.h>

#include <cmath>

#include "mlirl/env.hpp"
#include "mlirl/errors.hpp"
#include "mlirl/soft_rl.hpp"
#include "test_util.hpp"

using namespace mlirl;

namespace {

SoftQTable random_q(int n_states, int n_actions, double scale, RngStream& rng) {
    SoftQTable q;
    q.values.resize(n_states, n_actions);
    for (int s = 0; s < n_states; ++s)
        for (int a = 0; a < n_actions; ++a) q.values(s, a) = scale * rng.normal();
    return q;
}

}  // namespace

TEST_CASE("logsumexp_value closed forms") {
    SoftQTable q;
    q.values.resize(3, 3);
    q.values.row(0) << 0.0, 0.0, -1e300;  // effectively two actions
    q.values.row(1) << 1.0, 1.0, 1.0;
    q.values.row(2) << 0.0, std::log(3.0), -1e300;
    const SoftVTable v = logsumexp_value(q);
    CHECK(v.values[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(v.values[1] == doctest::Approx(1.0 + std::log(3.0)).epsilon(1e-12));
    CHECK(v.values[2] == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("logsumexp_value bounds: max <= V <= max + log A") {
    RngStream rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const SoftQTable q = random_q(4, 5, 10.0, rng);
        const SoftVTable v = logsumexp_value(q);
        for (int s = 0; s < 4; ++s) {
            const double peak = q.values.row(s).maxCoeff();
            CHECK(v.values[s] >= peak);
            CHECK(v.values[s] <= peak + std::log(5.0) + 1e-12);
        }
    }
}

TEST_CASE("boltzmann_policy closed forms and shift invariance") {
    SoftQTable q;
    q.values.resize(2, 2);
    q.values.row(0) << 0.0, 0.0;
    q.values.row(1) << std::log(3.0), 0.0;
    const TabularPolicy pi = boltzmann_policy(q);
    CHECK(pi.probs(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(pi.probs(1, 0) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(pi.probs(1, 1) == doctest::Approx(0.25).epsilon(1e-12));

    RngStream rng(12);
    for (int trial = 0; trial < 50; ++trial) {
        SoftQTable a = random_q(3, 4, 2.0, rng);
        SoftQTable b = a;
        const double shift = 10.0 * rng.normal();
        b.values.array() += shift;
        const TabularPolicy pa = boltzmann_policy(a);
        const TabularPolicy pb = boltzmann_policy(b);
        CHECK((pa.probs - pb.probs).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("soft Bellman operator closed forms") {
    SUBCASE("single state, single action, r = 1") {
        const Mdp mdp = testing::make_single_state_mdp(1, 0.9, 1.0);
        SoftQTable q{Eigen::MatrixXd::Zero(1, 1)};
        const SoftQTable tq = soft_bellman_optimality_operator(mdp, mdp.true_reward, q);
        CHECK(tq.values(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("zero reward, two actions: TQ = gamma ln 2") {
        const Mdp mdp = testing::make_single_state_mdp(2, 0.9, 0.0);
        SoftQTable q{Eigen::MatrixXd::Zero(1, 2)};
        const SoftQTable tq = soft_bellman_optimality_operator(mdp, mdp.true_reward, q);
        CHECK(tq.values(0, 0) == doctest::Approx(0.9 * std::log(2.0)).epsilon(1e-12));
        CHECK(tq.values(0, 1) == doctest::Approx(0.9 * std::log(2.0)).epsilon(1e-12));
    }
}

TEST_CASE("soft Bellman operator: contraction and shift covariance") {
    RngStream rng(42);
    for (int trial = 0; trial < 200; ++trial) {
        auto [mdp, features] =
            build_random_mdp(2 + trial % 5, 2 + trial % 3, 5, 1.0, 0.85, rng);
        const SoftQTable q1 = random_q(mdp.n_states, mdp.n_actions, 5.0, rng);
        const SoftQTable q2 = random_q(mdp.n_states, mdp.n_actions, 5.0, rng);
        const SoftQTable tq1 = soft_bellman_optimality_operator(mdp, mdp.true_reward, q1);
        const SoftQTable tq2 = soft_bellman_optimality_operator(mdp, mdp.true_reward, q2);

        const double lhs = (tq1.values - tq2.values).cwiseAbs().maxCoeff();
        const double rhs = mdp.discount * (q1.values - q2.values).cwiseAbs().maxCoeff();
        CHECK(lhs <= rhs + 1e-12);

        // T(Q + c 1) = TQ + gamma c 1
        const double c = 3.0 * rng.normal();
        SoftQTable shifted = q1;
        shifted.values.array() += c;
        const SoftQTable t_shifted =
            soft_bellman_optimality_operator(mdp, mdp.true_reward, shifted);
        CHECK((t_shifted.values - tq1.values).cwiseAbs().maxCoeff() ==
              doctest::Approx(std::abs(mdp.discount * c)).epsilon(1e-9));
    }
}

TEST_CASE("solve_soft_optimal scalar fixed points") {
    SUBCASE("r = 1, single action: Q* = 10") {
        const Mdp mdp = testing::make_single_state_mdp(1, 0.9, 1.0);
        const SoftSolution sol = solve_soft_optimal(mdp, mdp.true_reward, 1e-9);
        CHECK(sol.q.values(0, 0) == doctest::Approx(10.0).epsilon(1e-9));
    }
    SUBCASE("r = 0, two actions: entropy-only closed form") {
        const Mdp mdp = testing::make_single_state_mdp(2, 0.9, 0.0);
        const SoftSolution sol = solve_soft_optimal(mdp, mdp.true_reward, 1e-9);
        const double expected_q = 0.9 * std::log(2.0) / 0.1;
        CHECK(sol.q.values(0, 0) == doctest::Approx(expected_q).epsilon(1e-9));
        CHECK(sol.v.values(0) == doctest::Approx(std::log(2.0) / 0.1).epsilon(1e-9));
    }
    SUBCASE("iteration cap raises ConvergenceError") {
        const Mdp mdp = testing::make_single_state_mdp(1, 0.9, 1.0);
        CHECK_THROWS_AS(solve_soft_optimal(mdp, mdp.true_reward, 1e-9, 3), ConvergenceError);
    }
}

TEST_CASE("solve_soft_optimal residual guarantee") {
    RngStream rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        auto [mdp, features] = build_random_mdp(3 + trial % 6, 2 + trial % 4, 5, 1.0,
                                                0.8 + 0.15 * rng.uniform(), rng);
        const double tol = 1e-9;
        const SoftSolution sol = solve_soft_optimal(mdp, mdp.true_reward, tol);
        const SoftQTable tq = soft_bellman_optimality_operator(mdp, mdp.true_reward, sol.q);
        CHECK((tq.values - sol.q.values).cwiseAbs().maxCoeff() <= tol);
    }
}

TEST_CASE("soft optimal policy beats random policies in regularized return") {
    RngStream rng(3);
    auto [mdp, features] = build_random_mdp(3, 3, 5, 1.0, 0.9, rng);
    const SoftSolution sol = solve_soft_optimal(mdp, mdp.true_reward, 1e-10);

    // Entropy-regularized return from mu0, evaluated exactly.
    auto regularized_return = [&](const TabularPolicy& pi) {
        return mdp.initial_dist.dot(soft_v_of_policy(mdp, mdp.true_reward, pi).values);
    };
    const double optimal = regularized_return(sol.policy);

    RngStream sweep(99);
    for (int i = 0; i < 10000; ++i) {
        TabularPolicy pi;
        pi.probs.resize(3, 3);
        for (int s = 0; s < 3; ++s) {
            for (int a = 0; a < 3; ++a) pi.probs(s, a) = 1e-9 - std::log(sweep.uniform() + 1e-300);
            pi.probs.row(s) /= pi.probs.row(s).sum();
        }
        CHECK(regularized_return(pi) <= optimal + 1e-9);
    }
}

TEST_CASE("soft_q_of_policy closed forms") {
    SUBCASE("single action: no entropy, Q = c/(1-gamma)") {
        const Mdp mdp = testing::make_single_state_mdp(1, 0.9, 2.5);
        TabularPolicy pi;
        pi.probs = RowMatrixXd::Ones(1, 1);
        const SoftQTable q = soft_q_of_policy(mdp, mdp.true_reward, pi);
        CHECK(q.values(0, 0) == doctest::Approx(25.0).epsilon(1e-12));
    }
    SUBCASE("uniform policy, zero reward: entropy annuity") {
        const Mdp mdp = testing::make_single_state_mdp(2, 0.9, 0.0);
        const SoftQTable q =
            soft_q_of_policy(mdp, mdp.true_reward, TabularPolicy::uniform(1, 2));
        CHECK(q.values(0, 0) == doctest::Approx(0.9 * std::log(2.0) / 0.1).epsilon(1e-12));
    }
    SUBCASE("zero-probability action is rejected") {
        const Mdp mdp = testing::make_single_state_mdp(2, 0.9, 0.0);
        TabularPolicy pi;
        pi.probs.resize(1, 2);
        pi.probs << 1.0, 0.0;
        CHECK_THROWS_AS(soft_q_of_policy(mdp, mdp.true_reward, pi), ContractViolation);
    }
}

TEST_CASE("soft_q_of_policy at the optimal policy recovers Q*") {
    RngStream rng(15);
    auto [mdp, features] = build_random_mdp(4, 3, 5, 1.0, 0.9, rng);
    const double tol = 1e-9;
    const SoftSolution sol = solve_soft_optimal(mdp, mdp.true_reward, tol);
    const SoftQTable evaluated = soft_q_of_policy(mdp, mdp.true_reward, sol.policy);
    CHECK((evaluated.values - sol.q.values).cwiseAbs().maxCoeff() <= 10.0 * tol);
}

TEST_CASE("soft policy iteration: fixed point, monotonicity, convergence") {
    RngStream rng(23);
    auto [mdp, features] = build_random_mdp(4, 3, 5, 1.0, 0.9, rng);
    const SoftSolution sol = solve_soft_optimal(mdp, mdp.true_reward, 1e-12);

    SUBCASE("optimal policy is a fixed point") {
        const TabularPolicy next = soft_policy_iteration_step(mdp, mdp.true_reward, sol.policy);
        CHECK((next.probs - sol.policy.probs).cwiseAbs().maxCoeff() <= 1e-10);
    }

    SUBCASE("value improves monotonically at every state") {
        TabularPolicy pi = TabularPolicy::uniform(4, 3);
        for (int round = 0; round < 10; ++round) {
            const SoftVTable before = soft_v_of_policy(mdp, mdp.true_reward, pi);
            pi = soft_policy_iteration_step(mdp, mdp.true_reward, pi);
            const SoftVTable after = soft_v_of_policy(mdp, mdp.true_reward, pi);
            CHECK((after.values - before.values).minCoeff() >= -1e-10);
        }
    }

    SUBCASE("twenty rounds from uniform reach the optimal policy") {
        TabularPolicy pi = TabularPolicy::uniform(4, 3);
        for (int round = 0; round < 20; ++round)
            pi = soft_policy_iteration_step(mdp, mdp.true_reward, pi);
        CHECK((pi.probs - sol.policy.probs).cwiseAbs().maxCoeff() <= 1e-8);
    }
}

TEST_CASE("entropy closed forms") {
    TabularPolicy pi;
    pi.probs.resize(3, 4);
    pi.probs.row(0) << 0.5, 0.5, 0.0, 0.0;
    pi.probs.row(1) << 1.0 - 3e-12, 1e-12, 1e-12, 1e-12;
    pi.probs.row(2) << 0.25, 0.25, 0.25, 0.25;

    TabularPolicy two;
    two.probs.resize(1, 2);
    two.probs << 0.5, 0.5;
    CHECK(entropy(two, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK_THROWS_AS(entropy(pi, 0), ContractViolation);  // zero entries
    CHECK(entropy(pi, 1) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(entropy(pi, 2) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}
