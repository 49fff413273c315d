#include <benchmark/benchmark.h>

#include "mlirl/demos.hpp"
#include "mlirl/env.hpp"
#include "mlirl/likelihood.hpp"
#include "mlirl/ml_irl.hpp"
#include "mlirl/net.hpp"
#include "mlirl/soft_q_learning.hpp"
#include "mlirl/soft_rl.hpp"

using namespace mlirl;

namespace {

struct Env {
    Mdp mdp;
    FeatureMap features;
};

Env make_env(int n_states, int n_actions, int dim) {
    RngStream rng(1);
    auto [mdp, features] = build_random_mdp(n_states, n_actions, dim, 1.0, 0.9, rng);
    return Env{std::move(mdp), std::move(features)};
}

}  // namespace

static void BM_SolveSoftOptimal(benchmark::State& state) {
    const Env env = make_env(static_cast<int>(state.range(0)), 4, 8);
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_soft_optimal(env.mdp, env.mdp.true_reward, 1e-8));
    }
}
BENCHMARK(BM_SolveSoftOptimal)->Arg(5)->Arg(10)->Arg(25);

static void BM_OccupancyMeasure(benchmark::State& state) {
    const Env env = make_env(static_cast<int>(state.range(0)), 4, 8);
    const TabularPolicy uniform =
        TabularPolicy::uniform(env.mdp.n_states, env.mdp.n_actions);
    for (auto _ : state) {
        benchmark::DoNotOptimize(occupancy_measure(env.mdp, uniform));
    }
}
BENCHMARK(BM_OccupancyMeasure)->Arg(10)->Arg(25)->Arg(100);

static void BM_StationaryDistribution(benchmark::State& state) {
    const Env env = make_env(static_cast<int>(state.range(0)), 4, 8);
    const TabularPolicy uniform =
        TabularPolicy::uniform(env.mdp.n_states, env.mdp.n_actions);
    for (auto _ : state) {
        benchmark::DoNotOptimize(stationary_distribution(env.mdp, uniform));
    }
}
BENCHMARK(BM_StationaryDistribution)->Arg(10)->Arg(25)->Arg(100);

static void BM_ForwardTable(benchmark::State& state) {
    const Env env = make_env(25, 4, 32);
    RngStream rng(2);
    const TwoLayerNet net =
        TwoLayerNet::init(static_cast<int>(state.range(0)), 32, 10.0, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(forward_table(net, env.features));
    }
}
BENCHMARK(BM_ForwardTable)->Arg(128)->Arg(512)->Arg(2048);

static void BM_TdStep(benchmark::State& state) {
    const Env env = make_env(4, 2, 16);
    RngStream rng(3);
    const TwoLayerNet reward_net =
        TwoLayerNet::init(static_cast<int>(state.range(0)), 16, 1.0, rng);
    SoftQLearner learner(TwoLayerNet::init(static_cast<int>(state.range(0)), 16, 20.0, rng));
    RngStream sampler(4);
    for (auto _ : state) {
        TdSample sample;
        sample.state = sampler.uniform_int(4);
        sample.action = sampler.uniform_int(2);
        sample.next_state = sampler.uniform_int(4);
        benchmark::DoNotOptimize(
            learner.td_step(reward_net, sample, 0.01, 0.9, env.features));
    }
}
BENCHMARK(BM_TdStep)->Arg(512)->Arg(2048)->Arg(8192);

static void BM_DiscountedFeatureSum(benchmark::State& state) {
    const Env env = make_env(25, 4, 32);
    RngStream rng(5);
    const TwoLayerNet net =
        TwoLayerNet::init(static_cast<int>(state.range(0)), 32, 10.0, rng);
    RngStream traj_rng(6);
    const Trajectory traj =
        sample_trajectory(env.mdp, TabularPolicy::uniform(25, 4), 88, traj_rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(discounted_feature_sum(net, traj, 0.9, env.features));
    }
}
BENCHMARK(BM_DiscountedFeatureSum)->Arg(128)->Arg(512)->Arg(2048);

static void BM_LikelihoodGradientExact(benchmark::State& state) {
    const Env env = make_env(10, 3, 16);
    RngStream rng(7);
    const TwoLayerNet reward_net =
        TwoLayerNet::init(static_cast<int>(state.range(0)), 16, 1.0, rng);
    RngStream demo_rng(8);
    const DemoDataset demos = demo_dataset_generate(env.mdp, 10, 60, demo_rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            likelihood_gradient_exact(env.mdp, env.features, demos, reward_net));
    }
}
BENCHMARK(BM_LikelihoodGradientExact)->Arg(128)->Arg(512);

static void BM_SingleLoopIteration(benchmark::State& state) {
    const Env env = make_env(25, 4, 32);
    RngStream demo_rng(9);
    const DemoDataset demos = demo_dataset_generate(env.mdp, 20, 88, demo_rng);

    IrlConfig config;
    config.variant = IrlVariant::kSingleLoop;
    config.outer_iterations = 1 << 30;  // stepped manually below
    config.width = static_cast<int>(state.range(0));
    config.q_radius = 10.0;
    config.horizon = 88;
    config.diagnostics_interval = 1 << 30;
    IrlDriver driver(env.mdp, env.features, demos, config, RngBundle::from_master(10));
    for (auto _ : state) driver.step();
}
BENCHMARK(BM_SingleLoopIteration)->Arg(128)->Arg(512);

BENCHMARK_MAIN();
