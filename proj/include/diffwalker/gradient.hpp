#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

#include "diffwalker/diffusion.hpp"
#include "diffwalker/errors.hpp"
#include "diffwalker/lattice.hpp"
#include "diffwalker/parallel.hpp"
#include "diffwalker/random.hpp"

namespace diffwalker {

inline constexpr Index kDefaultSampleCount = 1024;

template <typename Scalar>
struct GradientRequest {
  /// dl/dZ_U, |U| x labels, rows in unmarked block order.
  Matrix<Scalar> loss_gradient;
  /// Number of edges to differentiate; nullopt means every edge.
  std::optional<Index> sample_count;
  /// Solve only the label with the largest |dl/dZ| at the chosen endpoint.
  bool pruning = false;
  std::uint64_t rng_seed = 0;
  /// Multiply sampled entries by |E|/n.
  bool rescale = false;
};

template <typename Scalar>
struct GradientReport {
  Vector<Scalar> grad;                // dl/dw, zero outside sampled_edges
  std::vector<Index> sampled_edges;   // ascending
  std::vector<int> pruned_labels;     // per sampled edge; -1 if not pruned or no solve
  std::vector<Index> pruned_endpoints;  // per sampled edge; vertex id or -1
  Index linear_solves = 0;
  double max_relative_residual = 0.0;
  double wall_seconds = 0.0;
};

/// n distinct edge ids drawn uniformly without replacement, returned in
/// ascending order. The draw depends only on (edge_count, n, rng_seed).
std::vector<Index> sample_edges(Index edge_count, Index n, std::uint64_t rng_seed);

namespace detail {

/// The right-hand side of L_U dZ_U/dw_e = -(dL_U/dw_e) Z_U - (dB^T/dw_e) Z_M
/// for label a is (Z_ua - Z_va) times this label-independent vector, which
/// holds -1 at u and +1 at v, restricted to unmarked endpoints.
template <typename Scalar>
void edge_direction(const LaplacianBlocks<Scalar>& blocks, const Edge& edge, Vector<Scalar>& rhs) {
  const auto u = static_cast<std::size_t>(edge.u);
  const auto v = static_cast<std::size_t>(edge.v);
  if (!blocks.is_marked[u]) rhs[blocks.block_index[u]] = Scalar(-1);
  if (!blocks.is_marked[v]) rhs[blocks.block_index[v]] = Scalar(1);
}

template <typename Scalar>
void check_request(const LaplacianBlocks<Scalar>& blocks, const AssignmentMatrix<Scalar>& z,
                   const Matrix<Scalar>& loss_gradient) {
  if (z.rows() != blocks.graph.vertex_count() || z.cols() != blocks.label_count) {
    throw ValidationError("assignment matrix shape does not match the Laplacian blocks");
  }
  if (loss_gradient.rows() != blocks.unmarked_count() || loss_gradient.cols() != blocks.label_count) {
    throw ValidationError("loss gradient must be |U| x labels");
  }
}

}  // namespace detail

/// Per-edge differentiation: one linear solve per sampled edge, shared by all
/// labels (or by the single pruned label). Solves run in parallel; each edge
/// owns its output slot.
template <typename Scalar>
GradientReport<Scalar> grad_per_edge(const LaplacianBlocks<Scalar>& blocks,
                                     const LaplacianSolver<Scalar>& solver,
                                     const AssignmentMatrix<Scalar>& assignments,
                                     const GradientRequest<Scalar>& request) {
  const auto start = std::chrono::steady_clock::now();
  detail::check_request(blocks, assignments, request.loss_gradient);
  const LatticeGraph& graph = blocks.graph;
  const Index edge_count = graph.edge_count();

  GradientReport<Scalar> report;
  if (request.sample_count) {
    report.sampled_edges = sample_edges(edge_count, *request.sample_count, request.rng_seed);
  } else {
    report.sampled_edges.resize(static_cast<std::size_t>(edge_count));
    std::iota(report.sampled_edges.begin(), report.sampled_edges.end(), Index{0});
  }
  const auto n = static_cast<Index>(report.sampled_edges.size());
  report.grad = Vector<Scalar>::Zero(edge_count);
  report.pruned_labels.assign(static_cast<std::size_t>(n), -1);
  report.pruned_endpoints.assign(static_cast<std::size_t>(n), -1);

  const Matrix<Scalar>& g = request.loss_gradient;
  std::vector<Scalar> values(static_cast<std::size_t>(n), Scalar(0));
  std::vector<Index> solves(static_cast<std::size_t>(n), 0);
  std::vector<double> residuals(static_cast<std::size_t>(n), 0.0);

  parallel_for(n, [&](Index k) {
    const auto slot = static_cast<std::size_t>(k);
    const Edge& edge = graph.edge(report.sampled_edges[slot]);
    const bool u_marked = blocks.is_marked[static_cast<std::size_t>(edge.u)];
    const bool v_marked = blocks.is_marked[static_cast<std::size_t>(edge.v)];
    if (u_marked && v_marked) return;

    Index first_label = 0;
    Index last_label = blocks.label_count;
    if (request.pruning) {
      // Endpoint whose largest |dl/dZ| entry is bigger; ties keep u.
      Index endpoint = u_marked ? edge.v : edge.u;
      Index row = blocks.block_index[static_cast<std::size_t>(endpoint)];
      Index best_label = 0;
      Scalar best = g.row(row).cwiseAbs().maxCoeff(&best_label);
      if (!u_marked && !v_marked) {
        Index other_label = 0;
        const Index other_row = blocks.block_index[static_cast<std::size_t>(edge.v)];
        const Scalar other = g.row(other_row).cwiseAbs().maxCoeff(&other_label);
        if (other > best) {
          endpoint = edge.v;
          best_label = other_label;
        }
      }
      report.pruned_endpoints[slot] = endpoint;
      report.pruned_labels[slot] = static_cast<int>(best_label);
      first_label = best_label;
      last_label = best_label + 1;
    }

    Vector<Scalar> rhs = Vector<Scalar>::Zero(blocks.unmarked_count());
    detail::edge_direction(blocks, edge, rhs);
    const auto solved = solver.solve(rhs);
    residuals[slot] = solved.relative_residual;
    solves[slot] = 1;
    Scalar total(0);
    for (Index a = first_label; a < last_label; ++a) {
      const Scalar diff = assignments(edge.u, a) - assignments(edge.v, a);
      total += diff * g.col(a).dot(solved.x);
    }
    values[slot] = total;
  });

  const Scalar scale = request.rescale && n > 0
                           ? static_cast<Scalar>(edge_count) / static_cast<Scalar>(n)
                           : Scalar(1);
  for (Index k = 0; k < n; ++k) {
    const auto slot = static_cast<std::size_t>(k);
    report.grad[report.sampled_edges[slot]] = scale * values[slot];
    report.linear_solves += solves[slot];
    report.max_relative_residual = std::max(report.max_relative_residual, residuals[slot]);
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

template <typename Scalar>
GradientReport<Scalar> grad_per_edge(const LaplacianBlocks<Scalar>& blocks,
                                     const AssignmentMatrix<Scalar>& assignments,
                                     const GradientRequest<Scalar>& request,
                                     const SolverOptions& options = {}) {
  return grad_per_edge(blocks, LaplacianSolver<Scalar>(blocks.unmarked, options), assignments,
                       request);
}

/// Exact dl/dw for every edge with one solve per label.
///
/// L_U is symmetric, so with lambda_a = L_U^{-1} (dl/dZ_U)_{:,a} the per-edge
/// derivative is -sum_a (lambda_ua - lambda_va)(Z_ua - Z_va), where lambda is
/// zero on marked vertices.
template <typename Scalar>
Vector<Scalar> grad_adjoint(const LaplacianBlocks<Scalar>& blocks,
                            const LaplacianSolver<Scalar>& solver,
                            const AssignmentMatrix<Scalar>& assignments,
                            const Matrix<Scalar>& loss_gradient) {
  detail::check_request(blocks, assignments, loss_gradient);
  const LatticeGraph& graph = blocks.graph;
  Matrix<Scalar> adjoint = Matrix<Scalar>::Zero(graph.vertex_count(), blocks.label_count);
  if (blocks.unmarked_count() > 0) {
    adjoint = scatter_assignments(blocks, solver.solve(loss_gradient));
    for (Index v : blocks.marked_vertices) adjoint.row(v).setZero();
  }
  Vector<Scalar> grad(graph.edge_count());
  for (Index e = 0; e < graph.edge_count(); ++e) {
    const auto [u, v] = graph.edge(e);
    grad[e] = -(adjoint.row(u) - adjoint.row(v)).dot(assignments.row(u) - assignments.row(v));
  }
  return grad;
}

template <typename Scalar>
Vector<Scalar> grad_adjoint(const LaplacianBlocks<Scalar>& blocks,
                            const AssignmentMatrix<Scalar>& assignments,
                            const Matrix<Scalar>& loss_gradient,
                            const SolverOptions& options = {}) {
  return grad_adjoint(blocks, LaplacianSolver<Scalar>(blocks.unmarked, options), assignments,
                      loss_gradient);
}

}  // namespace diffwalker
