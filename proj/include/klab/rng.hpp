#pragma once

#include <cstdint>

// Counter-based random number generation.  Every variate is a pure function
// of (seed, stream, counter), so samples can be generated in any order, from
// any thread, with identical results.  No generator state is ever shared.

namespace klab::rng {

// splitmix64 finalizer.  Bijective on 64-bit words, good avalanche.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t stream,
                                  std::uint64_t counter) {
    return mix64(mix64(mix64(seed) + stream) + counter);
}

// Map 64 random bits to the open interval (0,1).  The offset keeps the
// result strictly inside, so quantile transforms stay finite.
inline double to_unit_open(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

// Inverse standard normal CDF.  Defined in ensemble.cpp.
double normal_quantile(double u);

inline double std_normal(std::uint64_t seed, std::uint64_t stream,
                         std::uint64_t counter) {
    return normal_quantile(to_unit_open(counter_hash(seed, stream, counter)));
}

// Uniform double in [0,1).
inline double uniform01(std::uint64_t seed, std::uint64_t stream,
                        std::uint64_t counter) {
    return static_cast<double>(counter_hash(seed, stream, counter) >> 11) * 0x1.0p-53;
}

}  // namespace klab::rng
