#pragma once

/**
 * Deterministic counter-style random number generation.
 *
 * Every randomized component of the library draws from a SplitMix64 stream
 * whose initial state is derived from (seed, index) pairs via substream_key.
 * Streams for distinct indices are statistically independent, so trials can
 * be distributed over any number of workers without changing results. The
 * generator family and the derivation rule below are part of the output
 * compatibility contract; changing either changes every seeded artifact.
 */

#include <cstdint>
#include <stdexcept>

namespace qvam {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

/// SplitMix64 finalizer (Stafford mix13). Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}

/// Derives the state key of substream `index` of the stream keyed by `key`.
/// Nesting is allowed: substream_key(substream_key(seed, a), b).
constexpr std::uint64_t substream_key(std::uint64_t key, std::uint64_t index) noexcept {
    return mix64(key + kGolden * (index + 1));
}

class SplitMix64 {
public:
    explicit constexpr SplitMix64(std::uint64_t state) noexcept : state_(state) {}

    constexpr std::uint64_t next() noexcept {
        state_ += kGolden;
        return mix64(state_);
    }

    /// Unbiased integer in [0, bound). Lemire multiply-shift with rejection.
    std::uint64_t below(std::uint64_t bound) {
        if (bound == 0) {
            throw std::invalid_argument("SplitMix64::below: bound must be positive");
        }
        unsigned __int128 product = static_cast<unsigned __int128>(next()) * bound;
        auto low = static_cast<std::uint64_t>(product);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;  // 2^64 mod bound
            while (low < threshold) {
                product = static_cast<unsigned __int128>(next()) * bound;
                low = static_cast<std::uint64_t>(product);
            }
        }
        return static_cast<std::uint64_t>(product >> 64);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double unit() noexcept {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

private:
    std::uint64_t state_;
};

}  // namespace qvam
