#pragma once

#include <cstdint>
#include <random>

namespace dicot {

using Rng = std::mt19937_64;

// splitmix64 mix, used to derive independent engine seeds for the named
// streams of a run (0 = parameter init, 1 = training loop, ...).
inline uint64_t mix_seed(uint64_t seed, uint64_t stream) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline Rng make_rng(uint64_t seed) { return Rng(seed); }

// Inclusive on both ends.
inline int64_t uniform_int(Rng& rng, int64_t lo, int64_t hi) {
    std::uniform_int_distribution<int64_t> d(lo, hi);
    return d(rng);
}

inline double uniform_real(Rng& rng, double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    return d(rng);
}

inline double normal(Rng& rng, double mean, double stddev) {
    std::normal_distribution<double> d(mean, stddev);
    return d(rng);
}

}  // namespace dicot
