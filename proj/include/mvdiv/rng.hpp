#pragma once

#include <cstdint>
#include <random>

namespace mvdiv {

// Deterministic stream derivation. Every stochastic routine derives one
// std::mt19937_64 per unit of work (pseudo-pair index, Monte Carlo block,
// simulation replicate) from the master seed and a few tag words, never by
// sharing a generator across work items. This keeps results bit-identical
// for a fixed master seed no matter how the work is scheduled.

// Finalizer of the splitmix64 generator (Steele, Lea, Flood 2014); a strong
// 64-bit mixer with full avalanche.
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

// Folds one tag word into a seed, splitmix64-style. The +1 keeps word 0
// distinct from the identity.
inline std::uint64_t fold_seed(std::uint64_t seed, std::uint64_t word) {
  return mix64(seed + 0x9E3779B97F4A7C15ULL * (word + 1));
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag,
                                 std::uint64_t index) {
  return fold_seed(fold_seed(master, tag), index);
}

inline std::mt19937_64 make_stream(std::uint64_t master, std::uint64_t tag,
                                   std::uint64_t index) {
  return std::mt19937_64(derive_seed(master, tag, index));
}

// Reserved tag words. Each consumer owns one slot so streams never collide
// across pipeline stages.
namespace stream_tag {
inline constexpr std::uint64_t pairs_h0 = 0;
inline constexpr std::uint64_t pairs_h1 = 1;
inline constexpr std::uint64_t trim_x = 2;
inline constexpr std::uint64_t trim_y = 3;
inline constexpr std::uint64_t mc_block = 4;
inline constexpr std::uint64_t sim_h0 = 5;
inline constexpr std::uint64_t sim_h1 = 6;
}  // namespace stream_tag

}  // namespace mvdiv
