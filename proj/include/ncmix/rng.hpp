#pragma once

#include <cstdint>
#include <random>

namespace ncmix {

// splitmix64 step; used to derive independent stream seeds from a master
// seed and an index (restart number, replication number, link id, ...).
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t master, uint64_t index) {
    return splitmix64(master ^ splitmix64(index + 0x51ed270b85f4c1e7ull));
}

inline std::mt19937_64 make_rng(uint64_t master, uint64_t index) {
    return std::mt19937_64(derive_seed(master, index));
}

}  // namespace ncmix
