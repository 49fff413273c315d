#include "mlirl/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "mlirl/errors.hpp"

namespace mlirl {
namespace {

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace

RngStream::RngStream(std::uint64_t seed) : engine_(seed) {}

RngStream::RngStream(std::uint64_t master_seed, std::string_view substream) {
    const std::uint64_t tag = fnv1a64(substream);
    std::seed_seq seq{
        static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
        static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32)};
    engine_.seed(seq);
}

double RngStream::uniform() {
    // 53 random bits -> double in [0, 1).
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

int RngStream::uniform_int(int n) {
    if (n <= 0) throw ContractViolation("uniform_int: n must be positive");
    // Rejection sampling on the top bits keeps the draw unbiased.
    const std::uint64_t bound = n;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t v;
    do {
        v = engine_();
    } while (v >= limit);
    return static_cast<int>(v % bound);
}

double RngStream::rademacher() { return (engine_() & 1ull) ? 1.0 : -1.0; }

int RngStream::categorical(const Eigen::Ref<const Eigen::VectorXd>& probs) {
    const double u = uniform();
    double acc = 0.0;
    const Eigen::Index n = probs.size();
    for (Eigen::Index i = 0; i < n; ++i) {
        acc += probs[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(n - 1);
}

int RngStream::categorical_from_cdf(const Eigen::Ref<const Eigen::VectorXd>& cdf) {
    const double u = uniform() * cdf[cdf.size() - 1];
    const double* begin = cdf.data();
    const double* end = begin + cdf.size();
    const double* it = std::upper_bound(begin, end, u);
    if (it == end) --it;
    return static_cast<int>(it - begin);
}

std::string RngStream::save_state() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
}

void RngStream::load_state(const std::string& state) {
    std::istringstream is(state);
    is >> engine_;
    if (is.fail()) throw ConfigError("RngStream::load_state: malformed engine state");
}

RngBundle RngBundle::from_master(std::uint64_t master_seed) {
    return RngBundle{RngStream(master_seed, "env"), RngStream(master_seed, "init"),
                     RngStream(master_seed, "td_sampling"), RngStream(master_seed, "trajectory"),
                     RngStream(master_seed, "demo")};
}

}  // namespace mlirl
