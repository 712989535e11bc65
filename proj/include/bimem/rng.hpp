#pragma once

#include <cstdint>
#include <random>

namespace bimem {

// Independent generator streams derived from the single run seed.
enum class Stream : std::uint32_t {
  source_init = 1,
  source_shuffle = 2,
  target_init = 3,
  target_batches = 4,
};

inline std::mt19937_64 make_rng(std::uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

}  // namespace bimem
