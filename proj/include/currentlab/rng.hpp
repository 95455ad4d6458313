#pragma once

// Reproducible RNG streams. Every randomized run carries a 64-bit master
// seed; worker streams are keyed by (seed, module tag, chain index) so that
// the schedule of chains never perturbs the outputs.

#include <cstdint>
#include <random>
#include <string_view>

namespace currentlab {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// mt19937_64 keyed through splitmix64 of the (seed, module, chain) triple.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::string_view module_tag,
                                   std::uint64_t chain_index) {
    std::uint64_t s = seed ^ fnv1a(module_tag);
    splitmix64(s);
    s ^= 0x632be59bd9b4e019ULL * (chain_index + 1);
    std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                      static_cast<std::uint32_t>(chain_index), 0x5eedu};
    return std::mt19937_64(seq);
}

}  // namespace currentlab
