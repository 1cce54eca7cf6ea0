#include "diffwalker/learning.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace diffwalker {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::uint64_t step_seed(std::uint64_t seed, Index step) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(step + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void check_same_shape(const Matrix<double>& a, const Matrix<double>& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ValidationError(std::string(what) + ": shape mismatch");
  }
}

}  // namespace

std::string to_string(BackwardMode::Kind kind) {
  switch (kind) {
    case BackwardMode::Kind::kExact: return "exact";
    case BackwardMode::Kind::kSampled: return "sampled";
    case BackwardMode::Kind::kPruned: return "pruned";
  }
  return "exact";
}

std::string to_string(LossConfig::Variant variant) {
  return variant == LossConfig::Variant::kLogBarrier ? "log-barrier" : "side-ce";
}

EdgeParameters EdgeParameters::uninformative(Index edge_count) {
  const double s = (0.5 - kWeightFloor) / (1.0 - kWeightFloor);
  return {Vector<double>::Constant(edge_count, std::log(s / (1.0 - s)))};
}

EdgeWeights<double> EdgeParameters::weights() const {
  return theta.unaryExpr([](double t) { return sigmoid(t) * (1.0 - kWeightFloor) + kWeightFloor; });
}

Vector<double> EdgeParameters::weight_derivative() const {
  return theta.unaryExpr([](double t) {
    const double s = sigmoid(t);
    return s * (1.0 - s) * (1.0 - kWeightFloor);
  });
}

void adam_step(OptimizerState& state, Vector<double>& theta, const Vector<double>& grad) {
  if (grad.size() != theta.size()) throw ValidationError("gradient length does not match theta");
  if (state.first_moment.size() != theta.size()) {
    state.first_moment = Vector<double>::Zero(theta.size());
    state.second_moment = Vector<double>::Zero(theta.size());
  }
  ++state.step;
  state.first_moment = state.beta1 * state.first_moment + (1.0 - state.beta1) * grad;
  state.second_moment =
      state.beta2 * state.second_moment + (1.0 - state.beta2) * grad.cwiseAbs2();
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  theta.array() -= state.learning_rate * (state.first_moment.array() / c1) /
                   ((state.second_moment.array() / c2).sqrt() + state.epsilon);
}

double ce_assignment_loss(const AssignmentMatrix<double>& target,
                          const AssignmentMatrix<double>& assignments) {
  check_same_shape(target, assignments, "cross-entropy");
  if (target.rows() == 0) return 0.0;
  const auto logs =
      assignments.array().max(kProbabilityFloor).min(1.0).log();
  return -(target.array() * logs).sum() / static_cast<double>(target.rows());
}

Vector<double> edge_targets(const LatticeGraph& graph, const LabelImage& ground_truth) {
  if (ground_truth.rows() != graph.height() || ground_truth.cols() != graph.width()) {
    throw ValidationError("ground truth does not match the lattice shape");
  }
  const auto* ids = ground_truth.data();
  Vector<double> out(graph.edge_count());
  for (Index e = 0; e < graph.edge_count(); ++e) {
    const auto [u, v] = graph.edge(e);
    out[e] = ids[u] == ids[v] ? 1.0 : 0.0;
  }
  return out;
}

double side_weight_loss(const Vector<double>& targets, const EdgeWeights<double>& weights) {
  if (targets.size() != weights.size()) throw ValidationError("side loss: shape mismatch");
  if (weights.size() == 0) return 0.0;
  const auto w = weights.array().max(kProbabilityFloor).min(1.0 - kProbabilityFloor);
  return -(targets.array() * w.log() + (1.0 - targets.array()) * (1.0 - w).log()).mean();
}

LossTerms loss_terms(const AssignmentMatrix<double>& target,
                     const AssignmentMatrix<double>& assignments,
                     const Vector<double>& edge_labels, const EdgeParameters& params,
                     const LossConfig& config) {
  LossTerms t;
  t.ce = ce_assignment_loss(target, assignments);
  const EdgeWeights<double> w = params.weights();
  if (config.variant == LossConfig::Variant::kSideCrossEntropy) {
    t.side = config.alpha * side_weight_loss(edge_labels, w);
    t.reg = 0.5 * config.gamma * params.theta.squaredNorm();
  } else {
    const double v = static_cast<double>(target.rows());
    t.side = -config.barrier_alpha / (2.0 * v) * w.array().log().sum();
    t.reg = 0.5 * config.barrier_beta * params.theta.squaredNorm();
  }
  t.total = t.ce + t.side + t.reg;
  return t;
}

TrainingProblem make_training_problem(const LabelImage& ground_truth, const SeedSet& seeds) {
  TrainingProblem p{LatticeGraph(ground_truth.rows(), ground_truth.cols()), seeds, {}, {}};
  seeds.check_vertices(p.graph.vertex_count());
  if (seeds.empty()) throw ValidationError("training needs at least one seed");

  const auto* ids = ground_truth.data();
  std::map<std::int32_t, int> label_of_segment;
  std::map<int, std::int32_t> segment_of_label;
  for (const auto& s : seeds.entries()) {
    const std::int32_t id = ids[s.vertex];
    auto [it, fresh] = label_of_segment.emplace(id, s.label);
    if (!fresh && it->second != s.label) {
      throw ValidationError("segment " + std::to_string(id) + " holds seeds of different labels");
    }
    auto [jt, fresh_label] = segment_of_label.emplace(s.label, id);
    if (!fresh_label && jt->second != id) {
      throw ValidationError("label " + std::to_string(s.label) + " is seeded in several segments");
    }
  }

  p.target = AssignmentMatrix<double>::Zero(p.graph.vertex_count(), seeds.label_count());
  for (Index v = 0; v < p.graph.vertex_count(); ++v) {
    const auto it = label_of_segment.find(ids[v]);
    if (it == label_of_segment.end()) {
      throw ValidationError("segment " + std::to_string(ids[v]) + " has no seed");
    }
    p.target(v, it->second) = 1.0;
  }
  p.edge_labels = edge_targets(p.graph, ground_truth);
  return p;
}

LossEvaluation evaluate_loss(const TrainingProblem& problem, const EdgeParameters& params,
                             const LossConfig& config, const BackwardMode& backward,
                             std::uint64_t rng_seed, const SolverOptions& solver_options) {
  if (params.theta.size() != problem.graph.edge_count()) {
    throw ValidationError("parameter count does not match edge count");
  }
  const EdgeWeights<double> w = params.weights();
  if (!((w.array() > 0.0).all() && (w.array() <= 1.0).all())) {
    throw ValidationError("edge weights left (0, 1]");
  }

  const auto blocks = assemble_blocks(problem.graph, w, problem.seeds);
  const LaplacianSolver<double> solver(blocks.unmarked, solver_options);
  LossEvaluation out;
  out.assignments = solve_rw(blocks, solver).assignments;
  out.terms = loss_terms(problem.target, out.assignments, problem.edge_labels, params, config);

  const double vertex_count = static_cast<double>(problem.graph.vertex_count());
  Matrix<double> dz(blocks.unmarked_count(), blocks.label_count);
  for (Index i = 0; i < blocks.unmarked_count(); ++i) {
    const Index v = blocks.unmarked_vertices[static_cast<std::size_t>(i)];
    for (Index a = 0; a < blocks.label_count; ++a) {
      const double z = std::clamp(out.assignments(v, a), kProbabilityFloor, 1.0);
      dz(i, a) = -problem.target(v, a) / (vertex_count * z);
    }
  }

  if (backward.kind == BackwardMode::Kind::kExact) {
    out.grad_weights = grad_adjoint(blocks, solver, out.assignments, dz);
    out.linear_solves = blocks.label_count;
  } else {
    GradientRequest<double> request;
    request.loss_gradient = std::move(dz);
    request.sample_count = std::min(backward.samples, problem.graph.edge_count());
    request.pruning = backward.kind == BackwardMode::Kind::kPruned;
    request.rng_seed = rng_seed;
    request.rescale = backward.rescale;
    auto report = grad_per_edge(blocks, solver, out.assignments, request);
    out.grad_weights = std::move(report.grad);
    out.linear_solves = report.linear_solves;
  }

  if (config.variant == LossConfig::Variant::kSideCrossEntropy) {
    const double edges = static_cast<double>(w.size());
    const auto wc = w.array().max(kProbabilityFloor).min(1.0 - kProbabilityFloor);
    const auto& t = problem.edge_labels.array();
    out.grad_weights.array() += config.alpha / edges * (-t / wc + (1.0 - t) / (1.0 - wc));
  } else {
    out.grad_weights.array() -= config.barrier_alpha / (2.0 * vertex_count) / w.array();
  }

  const double decay = config.variant == LossConfig::Variant::kSideCrossEntropy
                           ? config.gamma
                           : config.barrier_beta;
  out.grad_theta = out.grad_weights.cwiseProduct(params.weight_derivative()) + decay * params.theta;
  return out;
}

TrainResult train_per_edge(const TrainingProblem& problem, const TrainConfig& config,
                           std::optional<EdgeParameters> initial) {
  if (config.epochs < 0) throw ValidationError("epochs must be nonnegative");
  if (config.backward.kind != BackwardMode::Kind::kExact &&
      (config.backward.samples < 1 || config.backward.samples > problem.graph.edge_count())) {
    throw ValidationError("sample count must lie in [1, " +
                          std::to_string(problem.graph.edge_count()) + "]");
  }

  TrainResult result;
  result.params = initial ? std::move(*initial)
                          : EdgeParameters::uninformative(problem.graph.edge_count());
  if (result.params.theta.size() != problem.graph.edge_count()) {
    throw ValidationError("initial parameter count does not match edge count");
  }
  OptimizerState state = config.optimizer;

  for (Index step = 0; step < config.epochs; ++step) {
    LossEvaluation eval;
    try {
      eval = evaluate_loss(problem, result.params, config.loss, config.backward,
                           step_seed(config.rng_seed, step), config.solver);
    } catch (const Error& e) {
      result.status = TrainResult::Status::kFailed;
      result.failure = e.what();
      result.failure_code = e.exit_code();
      return result;
    }
    result.trace.push_back({step, eval.terms});

    const std::size_t window = static_cast<std::size_t>(config.convergence_window);
    if (window > 0 && result.trace.size() > window) {
      const double before = result.trace[result.trace.size() - 1 - window].terms.total;
      if (std::abs(eval.terms.total - before) <= config.convergence_tolerance * std::abs(before)) {
        result.status = TrainResult::Status::kConverged;
        break;
      }
    }
    adam_step(state, result.params.theta, eval.grad_theta);
  }

  try {
    const auto blocks = assemble_blocks(problem.graph, result.params.weights(), problem.seeds);
    result.assignments = solve_rw(blocks, config.solver).assignments;
    result.labels = label(result.assignments, problem.graph.height(), problem.graph.width());
  } catch (const Error& e) {
    result.status = TrainResult::Status::kFailed;
    result.failure = e.what();
    result.failure_code = e.exit_code();
  }
  return result;
}

EdgeWeights<double> grady_weights(const LatticeGraph& graph, const Image<double>& image,
                                  double beta) {
  if (image.rows() != graph.height() || image.cols() != graph.width()) {
    throw ValidationError("image does not match the lattice shape");
  }
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ValidationError("beta must be a finite value >= 0");
  const auto* px = image.data();
  EdgeWeights<double> w(graph.edge_count());
  for (Index e = 0; e < graph.edge_count(); ++e) {
    const double d = px[graph.edge(e).u] - px[graph.edge(e).v];
    w[e] = std::exp(-beta * d * d);
  }
  return w;
}

Diffusion<double> grady_baseline(const Image<double>& image, const SeedSet& seeds, double beta,
                                 const SolverOptions& options) {
  const LatticeGraph graph(image.rows(), image.cols());
  return solve_rw(assemble_blocks(graph, grady_weights(graph, image, beta), seeds), options);
}

}  // namespace diffwalker
