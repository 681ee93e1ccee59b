#pragma once

#include <bit>
#include <cstdint>

namespace efgm {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

/// Stafford mix13 finalizer (the splitmix64 output function).
inline std::uint64_t mix64(std::uint64_t z)
{
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Gamma conditioning from SplittableRandom: odd, with enough bit transitions.
inline std::uint64_t mix_gamma(std::uint64_t z)
{
    z = mix64(z) | 1ULL;
    if (std::popcount(z ^ (z >> 1)) < 24) z ^= 0xAAAAAAAAAAAAAAAAULL;
    return z;
}

/// splitmix64 generator with a per-stream additive constant. Cheap to seed,
/// no warm-up, and streams derived through substream() are decorrelated, which
/// is what makes replication- and row-level parallelism deterministic.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t state, std::uint64_t gamma = kGolden)
        : state_(state), gamma_(gamma)
    {
    }

    std::uint64_t next() { return mix64(state_ += gamma_); }

    /// Uniform double in [0,1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    std::uint64_t gamma() const { return gamma_; }

private:
    std::uint64_t state_;
    std::uint64_t gamma_;
};

/// Keyed substream: the index-th independent stream under a master seed.
/// Identical (seed, index) always yields the same stream, regardless of how
/// many other substreams exist or which thread asks.
inline SplitMix64 substream(std::uint64_t seed, std::uint64_t index)
{
    const std::uint64_t state = mix64(seed + kGolden * (2 * index));
    const std::uint64_t gamma = mix_gamma(seed + kGolden * (2 * index + 1));
    return SplitMix64(state, gamma);
}

}  // namespace efgm
