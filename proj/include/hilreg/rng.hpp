#pragma once

#include <cstdint>
#include <random>

namespace hilreg {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to turn (master, stream, index) counters into
// statistically independent engine seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Seed for the `index`-th member of logical stream `stream` under `master`.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                    std::uint64_t index) noexcept {
    return mix64(mix64(mix64(master) ^ stream) + index);
}

// Well-known stream ids so that different consumers of the same master seed
// never share a sequence.
namespace streams {
inline constexpr std::uint64_t simulate = 0x51;
inline constexpr std::uint64_t replicate = 0x52;
inline constexpr std::uint64_t probe = 0x53;
inline constexpr std::uint64_t oracle = 0x54;
inline constexpr std::uint64_t bootstrap = 0x55;
inline constexpr std::uint64_t self_test = 0x56;
}  // namespace streams

}  // namespace hilreg
