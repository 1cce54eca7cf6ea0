#pragma once

// Shared test fixtures and independent reference computations. Nothing here
// calls into the blocks/solver/gradient code paths it is used to check.

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "diffwalker/lattice.hpp"
#include "diffwalker/types.hpp"

namespace fixtures {

using diffwalker::Index;
using diffwalker::LatticeGraph;
using diffwalker::Seed;
using diffwalker::SeedSet;

struct Instance {
  LatticeGraph graph{1, 1};
  Eigen::VectorXd weights;
  SeedSet seeds;
};

/// Random grid up to max_side x max_side with positive weights and `labels`
/// labels, each seeded at least once.
inline Instance random_instance(std::mt19937_64& rng, Index min_side, Index max_side, int labels,
                                double w_lo = 0.1, double w_hi = 1.0) {
  std::uniform_int_distribution<Index> side(min_side, max_side);
  Instance inst{LatticeGraph(side(rng), side(rng)), {}, {}};
  while (inst.graph.vertex_count() < labels + 1) inst.graph = LatticeGraph(side(rng), side(rng));
  std::uniform_real_distribution<double> w(w_lo, w_hi);
  inst.weights.resize(inst.graph.edge_count());
  for (Index e = 0; e < inst.weights.size(); ++e) inst.weights[e] = w(rng);

  std::vector<Index> vertices(static_cast<std::size_t>(inst.graph.vertex_count()));
  for (Index v = 0; v < inst.graph.vertex_count(); ++v) vertices[static_cast<std::size_t>(v)] = v;
  std::shuffle(vertices.begin(), vertices.end(), rng);
  std::uniform_int_distribution<int> extra(0, std::max<int>(0, static_cast<int>(vertices.size()) / 4 - labels));
  const int count = labels + extra(rng);
  std::uniform_int_distribution<int> any_label(0, labels - 1);
  std::vector<Seed> seeds;
  for (int k = 0; k < count; ++k)
    seeds.push_back({vertices[static_cast<std::size_t>(k)], k < labels ? k : any_label(rng)});
  inst.seeds = SeedSet(seeds);
  return inst;
}

/// Dense Laplacian assembled straight from the edge list.
inline Eigen::MatrixXd dense_laplacian(const LatticeGraph& graph, const Eigen::VectorXd& w) {
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(graph.vertex_count(), graph.vertex_count());
  for (Index e = 0; e < graph.edge_count(); ++e) {
    const auto [u, v] = graph.edge(e);
    l(u, u) += w[e];
    l(v, v) += w[e];
    l(u, v) -= w[e];
    l(v, u) -= w[e];
  }
  return l;
}

/// Full |V| x labels assignment from a dense solve of the unmarked system.
inline Eigen::MatrixXd dense_solve(const LatticeGraph& graph, const Eigen::VectorXd& w,
                                   const SeedSet& seeds) {
  const Eigen::MatrixXd l = dense_laplacian(graph, w);
  const Index n = graph.vertex_count();
  std::vector<int> seed_label(static_cast<std::size_t>(n), -1);
  for (const auto& s : seeds.entries()) seed_label[static_cast<std::size_t>(s.vertex)] = s.label;
  std::vector<Index> u;
  std::vector<Index> m;
  for (Index v = 0; v < n; ++v) (seed_label[static_cast<std::size_t>(v)] < 0 ? u : m).push_back(v);

  const auto nu = static_cast<Index>(u.size());
  const auto nm = static_cast<Index>(m.size());
  Eigen::MatrixXd lu(nu, nu);
  Eigen::MatrixXd bt(nu, nm);
  Eigen::MatrixXd zm = Eigen::MatrixXd::Zero(nm, seeds.label_count());
  for (Index i = 0; i < nu; ++i) {
    for (Index j = 0; j < nu; ++j) lu(i, j) = l(u[i], u[j]);
    for (Index j = 0; j < nm; ++j) bt(i, j) = l(u[i], m[j]);
  }
  for (Index j = 0; j < nm; ++j) zm(j, seed_label[static_cast<std::size_t>(m[j])]) = 1.0;

  Eigen::MatrixXd z(n, seeds.label_count());
  const Eigen::MatrixXd zu = lu.fullPivLu().solve(-bt * zm);
  for (Index i = 0; i < nu; ++i) z.row(u[i]) = zu.row(i);
  for (Index j = 0; j < nm; ++j) z.row(m[j]) = zm.row(j);
  return z;
}

/// Smooth test loss l(Z) = sum C.Z + 0.5 sum Z^2 over unmarked rows (marked
/// rows are constant and irrelevant to the gradient).
struct QuadraticLoss {
  Eigen::MatrixXd c;  // |V| x labels

  double value(const Eigen::MatrixXd& z) const {
    return (c.array() * z.array()).sum() + 0.5 * z.squaredNorm();
  }
  Eigen::MatrixXd gradient(const Eigen::MatrixXd& z) const { return c + z; }
};

/// Central finite differences of loss(dense_solve(w)) with relative step h.
template <typename Loss>
Eigen::VectorXd finite_difference_gradient(const Instance& inst, const Loss& loss, double h) {
  Eigen::VectorXd grad(inst.graph.edge_count());
  for (Index e = 0; e < grad.size(); ++e) {
    const double step = h * inst.weights[e];
    Eigen::VectorXd plus = inst.weights;
    Eigen::VectorXd minus = inst.weights;
    plus[e] += step;
    minus[e] -= step;
    grad[e] = (loss.value(dense_solve(inst.graph, plus, inst.seeds)) -
               loss.value(dense_solve(inst.graph, minus, inst.seeds))) /
              (2.0 * step);
  }
  return grad;
}

inline double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double scale = std::max(b.norm(), 1e-300);
  return (a - b).norm() / scale;
}

/// Two-region ground truth: a disk with an elongated arm inside a background.
inline diffwalker::LabelImage blob_with_arm(Index size) {
  diffwalker::LabelImage gt = diffwalker::LabelImage::Zero(size, size);
  const double s = static_cast<double>(size);
  const double cy = 0.38 * s;
  const double cx = 0.38 * s;
  const double radius = 0.22 * s;
  for (Index r = 0; r < size; ++r) {
    for (Index c = 0; c < size; ++c) {
      const double dy = static_cast<double>(r) - cy;
      const double dx = static_cast<double>(c) - cx;
      const bool disk = dy * dy + dx * dx <= radius * radius;
      const bool arm = static_cast<double>(r) >= 0.55 * s && static_cast<double>(r) < 0.65 * s &&
                       static_cast<double>(c) >= 0.3 * s && static_cast<double>(c) < 0.92 * s;
      if (disk || arm) gt(r, c) = 1;
    }
  }
  return gt;
}

}  // namespace fixtures
