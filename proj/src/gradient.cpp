#include "diffwalker/gradient.hpp"

#include <algorithm>
#include <string>

namespace diffwalker {

std::vector<Index> sample_edges(Index edge_count, Index n, std::uint64_t rng_seed) {
  if (n < 0 || n > edge_count) {
    throw ValidationError("cannot sample " + std::to_string(n) + " of " +
                          std::to_string(edge_count) + " edges");
  }
  std::vector<Index> ids(static_cast<std::size_t>(edge_count));
  std::iota(ids.begin(), ids.end(), Index{0});
  Rng rng(rng_seed);
  // Partial Fisher-Yates: the first n slots end up a uniform n-subset.
  for (Index i = 0; i < n; ++i) {
    const auto j = i + static_cast<Index>(uniform_below(rng, static_cast<std::uint64_t>(edge_count - i)));
    std::swap(ids[static_cast<std::size_t>(i)], ids[static_cast<std::size_t>(j)]);
  }
  ids.resize(static_cast<std::size_t>(n));
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace diffwalker
