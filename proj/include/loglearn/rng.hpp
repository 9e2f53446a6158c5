#pragma once

#include <cstdint>
#include <random>

namespace loglearn {

// splitmix64; used both as a seed mixer and for counter-mode child-seed
// derivation so sweep children are order-independent.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Child seed for the i-th grid point of a sweep (or any sub-task).
inline uint64_t derive_seed(uint64_t master, uint64_t counter) {
    return splitmix64(master ^ splitmix64(counter + 1));
}

inline std::mt19937_64 make_rng(uint64_t seed) { return std::mt19937_64(splitmix64(seed)); }

}  // namespace loglearn
