#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>

namespace whistle {

using Rng = std::mt19937_64;

/// Uniform integer in [0, n), portable across standard library implementations.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
    constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = kMax - kMax % n;
    std::uint64_t v;
    do {
        v = rng();
    } while (v >= limit);
    return v % n;
}

/// Uniform real in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// SplitMix64 finalizer; derives independent stream seeds from a base seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

template <typename It>
void shuffle(It first, It last, Rng& rng) {
    for (auto n = static_cast<std::uint64_t>(last - first); n > 1; --n) {
        std::iter_swap(first + static_cast<std::ptrdiff_t>(n - 1),
                       first + static_cast<std::ptrdiff_t>(uniform_below(rng, n)));
    }
}

}  // namespace whistle
