#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace mlirl {

/// Deterministic random stream. A single master seed fans out to named
/// substreams so that components (environment, net init, TD sampling,
/// trajectories, demos) can be varied independently.
///
/// All draws are built from the raw mt19937_64 output with fixed arithmetic
/// (no std distribution objects carry state across calls), so a stream is
/// fully described by its engine state and can be checkpointed and restored
/// mid-run.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed);
    RngStream(std::uint64_t master_seed, std::string_view substream);

    /// Uniform double in [0, 1).
    double uniform();

    /// Standard normal via Box-Muller (two uniforms per draw, stateless).
    double normal();

    /// Uniform integer in [0, n).
    int uniform_int(int n);

    /// +1 or -1 with equal probability.
    double rademacher();

    /// Index drawn from an explicit probability vector (need not be
    /// normalized to better than ~1e-12; the last index absorbs roundoff).
    int categorical(const Eigen::Ref<const Eigen::VectorXd>& probs);

    /// Index drawn via binary search on a precomputed cumulative vector.
    int categorical_from_cdf(const Eigen::Ref<const Eigen::VectorXd>& cdf);

    /// Engine state as text; load_state restores it exactly.
    std::string save_state() const;
    void load_state(const std::string& state);

private:
    std::mt19937_64 engine_;
};

/// The named substreams used by an experiment run.
struct RngBundle {
    RngStream env;
    RngStream init;
    RngStream td_sampling;
    RngStream trajectory;
    RngStream demo;

    static RngBundle from_master(std::uint64_t master_seed);
};

}  // namespace mlirl
