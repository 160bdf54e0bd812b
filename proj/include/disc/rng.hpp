#pragma once

#include <cstdint>
#include <random>

namespace disc {

using Rng = std::mt19937_64;

// Independent, reproducible generator for (seed, stream). Streams let one run
// draw directions and warm-start vectors without perturbing each other.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return Rng(seq);
}

inline int rademacher(Rng& rng) { return (rng() >> 63) ? 1 : -1; }

} // namespace disc
