#include "ocp/seeding.hpp"

#include <array>

namespace ocp {

std::uint64_t derive_seed(std::uint64_t global_seed, Stream stream, std::uint64_t index)
{
    std::seed_seq seq{static_cast<std::uint32_t>(global_seed),
                      static_cast<std::uint32_t>(global_seed >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(index),
                      static_cast<std::uint32_t>(index >> 32)};
    std::array<std::uint32_t, 2> words{};
    seq.generate(words.begin(), words.end());
    return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

std::mt19937_64 make_engine(std::uint64_t global_seed, Stream stream, std::uint64_t index)
{
    return std::mt19937_64(derive_seed(global_seed, stream, index));
}

} // namespace ocp
