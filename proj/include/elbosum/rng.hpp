#pragma once

#include <cstdint>
#include <random>

namespace elbosum::rng {

// SplitMix64 finalizer; turns a counter into a well-mixed 64-bit word.
inline std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Independent, reproducible generator for the index-th stream of a seeded
// run. Streams derived from the same seed never share engine state, so
// per-row sampling is order-independent.
inline std::mt19937_64 stream(std::uint64_t seed, std::uint64_t index) {
    return std::mt19937_64(mix(seed ^ mix(index)));
}

}  // namespace elbosum::rng
