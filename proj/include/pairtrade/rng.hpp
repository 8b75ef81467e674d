// Counter-based random number generation.
//
// Every random draw in the library is a pure function of a (seed, counter,
// stream) triple, so paths and sub-seeds are reproducible regardless of
// evaluation order or worker count.

#pragma once

#include <cstdint>
#include <string_view>

namespace pairtrade::rng {

// SplitMix64 finalizer; good avalanche, cheap.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t hash2(std::uint64_t a, std::uint64_t b) {
    return mix64(mix64(a) ^ (b + 0x9e3779b97f4a7c15ULL));
}

inline std::uint64_t hash3(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return hash2(hash2(a, b), c);
}

inline std::uint64_t hash4(std::uint64_t a, std::uint64_t b, std::uint64_t c,
                           std::uint64_t d) {
    return hash2(hash3(a, b, c), d);
}

// Labeled sub-seed derivation, e.g. derive_seed(seed, "path", n).
inline std::uint64_t label_hash(std::string_view label) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char ch : label) {
        h ^= static_cast<unsigned char>(ch);
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view label,
                                 std::uint64_t index) {
    return hash3(seed, label_hash(label), index);
}

// Uniform in the open interval (0, 1); never returns 0 or 1.
inline double to_unit(std::uint64_t h) {
    return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

inline double uniform(std::uint64_t seed, std::uint64_t counter) {
    return to_unit(hash2(seed, counter));
}

}  // namespace pairtrade::rng
