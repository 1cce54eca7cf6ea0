#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace diffwalker {

using Rng = std::mt19937_64;

/// Unbiased draw from [0, bound). Built on the raw engine output so the
/// sequence is identical across standard library implementations.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
  const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t limit = max - max % bound;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % bound;
}

}  // namespace diffwalker
