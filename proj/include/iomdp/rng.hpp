#pragma once

#include <cstdint>

namespace iomdp {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

/// SplitMix64 output finalizer.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Seed of the k-th independent stream derived from `seed`:
/// mix64(seed + k * 0x9E3779B97F4A7C15), wrapping mod 2^64.
///
/// Rollout r of an evaluation uses substream(master, r + 1). Inside a rollout
/// the dynamics draw from substream(run_seed, 1) and the channel from
/// substream(run_seed, 2), so two policies compared under the same seed see
/// the same channel outcomes step for step.
[[nodiscard]] constexpr std::uint64_t substream(std::uint64_t seed, std::uint64_t k) noexcept {
    return mix64(seed + k * kGolden);
}

/// SplitMix64: 64-bit state, Weyl increment, bit-exact on every platform.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    constexpr explicit SplitMix64(std::uint64_t seed = 0) noexcept : state_(seed) {}

    constexpr std::uint64_t next() noexcept {
        state_ += kGolden;
        return mix64(state_);
    }
    constexpr std::uint64_t operator()() noexcept { return next(); }

    /// Uniform double in [0, 1) from the top 53 bits.
    constexpr double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    static constexpr std::uint64_t min() noexcept { return 0; }
    static constexpr std::uint64_t max() noexcept { return ~std::uint64_t{0}; }

private:
    std::uint64_t state_;
};

}  // namespace iomdp
