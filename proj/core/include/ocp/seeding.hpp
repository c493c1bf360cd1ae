#pragma once

#include <cstdint>
#include <random>

namespace ocp {

/// Named random streams derived from one global seed.
enum class Stream : std::uint32_t {
    positions = 1,
    velocities = 2,
    divergence = 3,
    bootstrap = 4,
    sweep_point = 5,
    initial_layout = 6,
};

/// Derives an independent 64-bit seed for (stream, index) from a global seed.
///
/// The mapping feeds (seed low word, seed high word, stream, index low, index high)
/// through std::seed_seq, whose mixing algorithm is fixed by the C++ standard, and
/// packs the first two generated words. Results are identical on every conforming
/// implementation.
std::uint64_t derive_seed(std::uint64_t global_seed, Stream stream, std::uint64_t index = 0);

/// A mt19937_64 engine seeded from derive_seed(global_seed, stream, index).
std::mt19937_64 make_engine(std::uint64_t global_seed, Stream stream, std::uint64_t index = 0);

} // namespace ocp
