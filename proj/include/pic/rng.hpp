#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace pic {

// SplitMix64 finalizer. Used as a stateless counter-based generator: every
// sample is a pure function of (seed, stream, counter), so particle
// initialization is reproducible regardless of traversal order.
inline std::uint64_t hash_mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
    return hash_mix(hash_mix(hash_mix(seed) ^ stream) ^ counter);
}

// Uniform on the open interval (0,1); never hits an endpoint, so log() is safe.
inline double uniform01(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
    const std::uint64_t bits = hash_combine(seed, stream, counter);
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

// Standard normal via Box-Muller; one value per (stream, counter) pair.
inline double gaussian(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
    const double u1 = uniform01(seed, stream, 2 * counter);
    const double u2 = uniform01(seed, stream, 2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

} // namespace pic
