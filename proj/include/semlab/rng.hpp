#pragma once

#include <cstdint>
#include <string_view>

namespace semlab {

// splitmix64 step: advances state and returns the next output.
std::uint64_t splitmix64(std::uint64_t& state);

// FNV-1a over bytes; used to derive per-stage sub-seeds.
std::uint64_t fnv1a64(std::string_view bytes);

// Sub-seed for a named pipeline stage, so stages draw from independent streams.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view stage) {
    return base + fnv1a64(stage);
}

// xoshiro256++ generator. Deterministic given the seed; all distributions below
// consume a fixed number of raw draws so sequences are reproducible across
// platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform on [0, 1), 53-bit resolution.
    double uniform();

    // Uniform on (0, 1]; safe as a log() argument.
    double uniform_pos() { return 1.0 - uniform(); }

    // Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller. Always consumes exactly two raw draws
    // and discards the second variate, keeping the draw count predictable.
    double gaussian();

    double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

    // Unbiased integer in [0, n). n must be > 0.
    std::uint64_t uniform_index(std::uint64_t n);

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t s_[4];
    std::uint64_t seed_;
};

}  // namespace semlab
