#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "diffwalker/errors.hpp"
#include "diffwalker/types.hpp"

namespace diffwalker {

struct Edge {
  Index u;  // smaller vertex id
  Index v;
};

/// 4-connected pixel lattice.
///
/// Vertex id of pixel (r, c) is r * width + c. Edges are enumerated
/// canonically: first all horizontal edges (r, c)-(r, c+1) in row-major order
/// of their left pixel, then all vertical edges (r, c)-(r+1, c) in row-major
/// order of their upper pixel. Weight files and gradients use this order.
class LatticeGraph {
 public:
  LatticeGraph(Index height, Index width);

  Index height() const noexcept { return height_; }
  Index width() const noexcept { return width_; }
  Index vertex_count() const noexcept { return height_ * width_; }
  Index edge_count() const noexcept { return static_cast<Index>(edges_.size()); }
  Index horizontal_edge_count() const noexcept { return height_ * (width_ - 1); }

  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const Edge& edge(Index e) const { return edges_[static_cast<std::size_t>(e)]; }

  Index vertex(Index row, Index col) const noexcept { return row * width_ + col; }
  Index row_of(Index vertex) const noexcept { return vertex / width_; }
  Index col_of(Index vertex) const noexcept { return vertex % width_; }

  bool is_horizontal(Index e) const noexcept { return e < horizontal_edge_count(); }
  /// Canonical index of the edge joining two 4-neighbours, or -1.
  Index edge_between(Index a, Index b) const noexcept;

  bool operator==(const LatticeGraph& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }

 private:
  Index height_;
  Index width_;
  std::vector<Edge> edges_;
};

LatticeGraph build_lattice(Index height, Index width);

struct Seed {
  Index vertex;
  int label;

  bool operator==(const Seed&) const = default;
};

/// Marked vertices with their labels. Labels form the contiguous range
/// [0, label_count) and each label is used at least once.
class SeedSet {
 public:
  SeedSet() = default;
  explicit SeedSet(std::vector<Seed> entries);

  const std::vector<Seed>& entries() const noexcept { return entries_; }
  int label_count() const noexcept { return label_count_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  /// Throws ValidationError if a vertex id is outside [0, vertex_count).
  void check_vertices(Index vertex_count) const;

 private:
  std::vector<Seed> entries_;
  int label_count_ = 0;
};

/// Unmarked/marked partition of the Laplacian.
///
/// Marked vertices are ordered by ascending vertex id, as are unmarked ones,
/// so the blocks do not depend on the order seeds were supplied in.
template <typename Scalar>
struct LaplacianBlocks {
  LatticeGraph graph{1, 1};
  SparseMatrix<Scalar> unmarked;   // L_U, |U| x |U|
  SparseMatrix<Scalar> coupling;   // B^T, |U| x |M|
  Matrix<Scalar> marked_assignments;  // Z_M, one-hot, |M| x labels
  std::vector<Index> unmarked_vertices;
  std::vector<Index> marked_vertices;
  std::vector<Index> block_index;      // vertex -> row within its own block
  std::vector<std::uint8_t> is_marked;  // per vertex
  int label_count = 0;

  Index unmarked_count() const noexcept {
    return static_cast<Index>(unmarked_vertices.size());
  }
  Index marked_count() const noexcept {
    return static_cast<Index>(marked_vertices.size());
  }
};

namespace detail {

/// Returns a vertex lying in a connected component (over edges with
/// active_edge[e] != 0) that contains no seed.
std::optional<Index> find_unseeded_vertex(const LatticeGraph& graph,
                                          std::span<const std::uint8_t> active_edge,
                                          const SeedSet& seeds);

std::string describe_vertex(const LatticeGraph& graph, Index vertex);

template <typename Scalar>
void check_weights(const LatticeGraph& graph, const EdgeWeights<Scalar>& weights) {
  if (weights.size() != graph.edge_count()) {
    throw ValidationError("weight count " + std::to_string(weights.size()) +
                          " does not match edge count " +
                          std::to_string(graph.edge_count()));
  }
  for (Index e = 0; e < weights.size(); ++e) {
    if (!std::isfinite(weights[e]) || weights[e] < Scalar(0)) {
      throw ValidationError("edge weight " + std::to_string(e) +
                            " is negative or not finite");
    }
  }
}

}  // namespace detail

/// Full graph Laplacian L = D - A over all vertices.
template <typename Scalar>
SparseMatrix<Scalar> assemble_laplacian(const LatticeGraph& graph,
                                        const EdgeWeights<Scalar>& weights) {
  detail::check_weights(graph, weights);
  std::vector<Eigen::Triplet<Scalar>> triplets;
  triplets.reserve(static_cast<std::size_t>(4 * graph.edge_count() + graph.vertex_count()));
  for (Index v = 0; v < graph.vertex_count(); ++v) triplets.emplace_back(v, v, Scalar(0));
  for (Index e = 0; e < graph.edge_count(); ++e) {
    const auto [u, v] = graph.edge(e);
    const Scalar w = weights[e];
    triplets.emplace_back(u, u, w);
    triplets.emplace_back(v, v, w);
    triplets.emplace_back(u, v, -w);
    triplets.emplace_back(v, u, -w);
  }
  SparseMatrix<Scalar> laplacian(graph.vertex_count(), graph.vertex_count());
  laplacian.setFromTriplets(triplets.begin(), triplets.end());
  return laplacian;
}

/// Splits the weighted Laplacian into the unmarked block L_U and the coupling
/// B^T. Zero-weight edges are treated as absent. Edges joining two marked
/// vertices contribute to neither block.
///
/// Throws SingularSystemError when a connected component carries no seed.
template <typename Scalar>
LaplacianBlocks<Scalar> assemble_blocks(const LatticeGraph& graph,
                                        const EdgeWeights<Scalar>& weights,
                                        const SeedSet& seeds) {
  detail::check_weights(graph, weights);
  seeds.check_vertices(graph.vertex_count());

  std::vector<std::uint8_t> active(static_cast<std::size_t>(graph.edge_count()));
  for (Index e = 0; e < graph.edge_count(); ++e) active[static_cast<std::size_t>(e)] = weights[e] > Scalar(0);
  if (auto lonely = detail::find_unseeded_vertex(graph, active, seeds)) {
    throw SingularSystemError("singular system: " + detail::describe_vertex(graph, *lonely) +
                                  " is not connected to any seed",
                              *lonely);
  }

  const auto n = static_cast<std::size_t>(graph.vertex_count());
  LaplacianBlocks<Scalar> blocks;
  blocks.graph = graph;
  blocks.label_count = seeds.label_count();
  blocks.is_marked.assign(n, 0);
  blocks.block_index.assign(n, -1);

  std::vector<int> seed_label(n, -1);
  for (const auto& s : seeds.entries()) {
    blocks.is_marked[static_cast<std::size_t>(s.vertex)] = 1;
    seed_label[static_cast<std::size_t>(s.vertex)] = s.label;
  }
  for (Index v = 0; v < graph.vertex_count(); ++v) {
    auto& order = blocks.is_marked[static_cast<std::size_t>(v)] ? blocks.marked_vertices
                                                                : blocks.unmarked_vertices;
    blocks.block_index[static_cast<std::size_t>(v)] = static_cast<Index>(order.size());
    order.push_back(v);
  }

  blocks.marked_assignments = Matrix<Scalar>::Zero(blocks.marked_count(), blocks.label_count);
  for (Index m = 0; m < blocks.marked_count(); ++m) {
    const auto v = static_cast<std::size_t>(blocks.marked_vertices[static_cast<std::size_t>(m)]);
    blocks.marked_assignments(m, seed_label[v]) = Scalar(1);
  }

  std::vector<Eigen::Triplet<Scalar>> lu;
  std::vector<Eigen::Triplet<Scalar>> bt;
  lu.reserve(static_cast<std::size_t>(4 * graph.edge_count()) + n);
  for (Index i = 0; i < blocks.unmarked_count(); ++i) lu.emplace_back(i, i, Scalar(0));

  for (Index e = 0; e < graph.edge_count(); ++e) {
    const Scalar w = weights[e];
    if (!(w > Scalar(0))) continue;
    const auto [u, v] = graph.edge(e);
    const bool u_marked = blocks.is_marked[static_cast<std::size_t>(u)];
    const bool v_marked = blocks.is_marked[static_cast<std::size_t>(v)];
    const Index iu = blocks.block_index[static_cast<std::size_t>(u)];
    const Index iv = blocks.block_index[static_cast<std::size_t>(v)];
    if (!u_marked && !v_marked) {
      lu.emplace_back(iu, iu, w);
      lu.emplace_back(iv, iv, w);
      lu.emplace_back(iu, iv, -w);
      lu.emplace_back(iv, iu, -w);
    } else if (!u_marked) {
      lu.emplace_back(iu, iu, w);
      bt.emplace_back(iu, iv, -w);
    } else if (!v_marked) {
      lu.emplace_back(iv, iv, w);
      bt.emplace_back(iv, iu, -w);
    }
  }

  blocks.unmarked.resize(blocks.unmarked_count(), blocks.unmarked_count());
  blocks.unmarked.setFromTriplets(lu.begin(), lu.end());
  blocks.coupling.resize(blocks.unmarked_count(), blocks.marked_count());
  blocks.coupling.setFromTriplets(bt.begin(), bt.end());
  return blocks;
}

}  // namespace diffwalker
