#pragma once

#include <cstdint>
#include <random>

namespace rbm {

using Engine = std::mt19937_64;

/// Seed for sub-stream `stream` of a run seeded with `master`.
///
/// Rule: splitmix64(master + (stream + 1) * 0x9E3779B97F4A7C15). Sub-streams
/// are independent of thread count and scheduling, so parallel runs are
/// reproducible from the master seed alone.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t z = master + (stream + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace rbm
