#include "diffwalker/lattice.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

namespace diffwalker {

LatticeGraph::LatticeGraph(Index height, Index width) : height_(height), width_(width) {
  if (height < 1 || width < 1) {
    throw ValidationError("lattice dimensions must be positive, got " +
                          std::to_string(height) + "x" + std::to_string(width));
  }
  edges_.reserve(static_cast<std::size_t>(height * (width - 1) + (height - 1) * width));
  for (Index r = 0; r < height; ++r)
    for (Index c = 0; c + 1 < width; ++c) edges_.push_back({vertex(r, c), vertex(r, c + 1)});
  for (Index r = 0; r + 1 < height; ++r)
    for (Index c = 0; c < width; ++c) edges_.push_back({vertex(r, c), vertex(r + 1, c)});
}

Index LatticeGraph::edge_between(Index a, Index b) const noexcept {
  if (a > b) std::swap(a, b);
  if (a < 0 || b >= vertex_count()) return -1;
  const Index r = row_of(a);
  const Index c = col_of(a);
  if (b == a + 1 && c + 1 < width_) return r * (width_ - 1) + c;
  if (b == a + width_) return horizontal_edge_count() + a;
  return -1;
}

LatticeGraph build_lattice(Index height, Index width) { return LatticeGraph(height, width); }

SeedSet::SeedSet(std::vector<Seed> entries) : entries_(std::move(entries)) {
  std::unordered_set<Index> vertices;
  int max_label = -1;
  for (const auto& s : entries_) {
    if (s.label < 0) throw ValidationError("seed labels must be nonnegative");
    if (!vertices.insert(s.vertex).second) {
      throw ValidationError("vertex " + std::to_string(s.vertex) + " is seeded twice");
    }
    max_label = std::max(max_label, s.label);
  }
  std::vector<std::uint8_t> used(static_cast<std::size_t>(max_label + 1), 0);
  for (const auto& s : entries_) used[static_cast<std::size_t>(s.label)] = 1;
  for (int a = 0; a <= max_label; ++a) {
    if (!used[static_cast<std::size_t>(a)]) {
      throw ValidationError("seed labels must be contiguous; label " + std::to_string(a) +
                            " has no seed");
    }
  }
  label_count_ = max_label + 1;
}

void SeedSet::check_vertices(Index vertex_count) const {
  for (const auto& s : entries_) {
    if (s.vertex < 0 || s.vertex >= vertex_count) {
      throw ValidationError("seed vertex " + std::to_string(s.vertex) +
                            " outside the lattice of " + std::to_string(vertex_count) +
                            " vertices");
    }
  }
}

namespace detail {

namespace {

struct DisjointSets {
  explicit DisjointSets(Index n) : parent(static_cast<std::size_t>(n)) {
    std::iota(parent.begin(), parent.end(), Index{0});
  }
  Index find(Index x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      auto& p = parent[static_cast<std::size_t>(x)];
      p = parent[static_cast<std::size_t>(p)];
      x = p;
    }
    return x;
  }
  void unite(Index a, Index b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }
  std::vector<Index> parent;
};

}  // namespace

std::optional<Index> find_unseeded_vertex(const LatticeGraph& graph,
                                          std::span<const std::uint8_t> active_edge,
                                          const SeedSet& seeds) {
  DisjointSets sets(graph.vertex_count());
  for (Index e = 0; e < graph.edge_count(); ++e) {
    if (active_edge[static_cast<std::size_t>(e)]) sets.unite(graph.edge(e).u, graph.edge(e).v);
  }
  std::vector<std::uint8_t> seeded(static_cast<std::size_t>(graph.vertex_count()), 0);
  for (const auto& s : seeds.entries()) seeded[static_cast<std::size_t>(sets.find(s.vertex))] = 1;
  for (Index v = 0; v < graph.vertex_count(); ++v) {
    if (!seeded[static_cast<std::size_t>(sets.find(v))]) return v;
  }
  return std::nullopt;
}

std::string describe_vertex(const LatticeGraph& graph, Index vertex) {
  return "vertex " + std::to_string(vertex) + " (row " + std::to_string(graph.row_of(vertex)) +
         ", col " + std::to_string(graph.col_of(vertex)) + ")";
}

}  // namespace detail

}  // namespace diffwalker
