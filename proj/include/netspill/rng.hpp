#pragma once

#include <cstdint>
#include <random>

namespace netspill {

using Rng = std::mt19937_64;

/// Generator for the stream (seed, stream). Streams are derived from the pair
/// alone, so replicate r sees the same draws whatever thread runs it.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

inline double draw_uniform(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline int draw_bernoulli(Rng& rng, double p) { return draw_uniform(rng) < p ? 1 : 0; }

inline double draw_std_normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

}  // namespace netspill
