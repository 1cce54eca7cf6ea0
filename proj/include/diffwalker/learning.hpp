#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "diffwalker/diffusion.hpp"
#include "diffwalker/errors.hpp"
#include "diffwalker/gradient.hpp"
#include "diffwalker/lattice.hpp"
#include "diffwalker/types.hpp"

namespace diffwalker {

/// Lower bound of the logistic weight map.
inline constexpr double kWeightFloor = 1e-6;
/// Probabilities are clamped to [kProbabilityFloor, 1] before taking logs.
inline constexpr double kProbabilityFloor = 1e-12;

/// One free parameter per edge, mapped to a weight in (kWeightFloor, 1] by
/// w = sigmoid(theta) * (1 - kWeightFloor) + kWeightFloor.
struct EdgeParameters {
  Vector<double> theta;

  /// Constant parameters giving w = 0.5 on every edge.
  static EdgeParameters uninformative(Index edge_count);

  EdgeWeights<double> weights() const;
  /// dw/dtheta, elementwise.
  Vector<double> weight_derivative() const;
};

struct LossConfig {
  enum class Variant { kSideCrossEntropy, kLogBarrier };

  Variant variant = Variant::kSideCrossEntropy;
  double alpha = 1e-2;          // side cross-entropy weight
  double gamma = 1e-5;          // l2 decay with the side loss
  double barrier_alpha = 1e-5;  // log-barrier weight
  double barrier_beta = 1e-5;   // l2 decay with the log barrier
};

struct LossTerms {
  double total = 0.0;
  double ce = 0.0;
  double side = 0.0;  // weighted side term: alpha * CE(w*, w) or the barrier
  double reg = 0.0;
};

/// How dl/dw is obtained from dl/dZ_U.
struct BackwardMode {
  enum class Kind { kExact, kSampled, kPruned };

  Kind kind = Kind::kExact;
  Index samples = kDefaultSampleCount;
  bool rescale = false;

  static BackwardMode exact() { return {}; }
  static BackwardMode sampled(Index n) { return {Kind::kSampled, n, false}; }
  static BackwardMode pruned(Index n) { return {Kind::kPruned, n, false}; }
};

std::string to_string(BackwardMode::Kind kind);
std::string to_string(LossConfig::Variant variant);

/// Adam moments and hyperparameters.
struct OptimizerState {
  Vector<double> first_moment;
  Vector<double> second_moment;
  Index step = 0;
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

void adam_step(OptimizerState& state, Vector<double>& theta, const Vector<double>& grad);

/// -(1/|V|) sum_i sum_a Z*_ia log Z_ia over all vertices.
double ce_assignment_loss(const AssignmentMatrix<double>& target,
                          const AssignmentMatrix<double>& assignments);

/// Ground-truth edge labels: 0 where the edge crosses a segment boundary, else 1.
Vector<double> edge_targets(const LatticeGraph& graph, const LabelImage& ground_truth);

/// Binary cross-entropy between edge labels and weights, averaged over edges.
double side_weight_loss(const Vector<double>& targets, const EdgeWeights<double>& weights);

/// Loss value for a known assignment matrix.
LossTerms loss_terms(const AssignmentMatrix<double>& target,
                     const AssignmentMatrix<double>& assignments,
                     const Vector<double>& edge_labels, const EdgeParameters& params,
                     const LossConfig& config);

/// A single image to regress: lattice, seeds, and the one-hot ground truth.
struct TrainingProblem {
  LatticeGraph graph{1, 1};
  SeedSet seeds;
  AssignmentMatrix<double> target;  // Z*, |V| x labels
  Vector<double> edge_labels;       // w*
};

/// Pairs a ground-truth segmentation with seeds. Each segment must hold seeds
/// of exactly one label and every label must cover exactly one segment.
TrainingProblem make_training_problem(const LabelImage& ground_truth, const SeedSet& seeds);

struct LossEvaluation {
  LossTerms terms;
  AssignmentMatrix<double> assignments;
  Vector<double> grad_weights;  // dl/dw
  Vector<double> grad_theta;    // dl/dtheta
  Index linear_solves = 0;
};

/// Forward solve, loss, and gradient in one pass. rng_seed drives edge
/// sampling for the sampled backward modes.
LossEvaluation evaluate_loss(const TrainingProblem& problem, const EdgeParameters& params,
                             const LossConfig& config, const BackwardMode& backward,
                             std::uint64_t rng_seed, const SolverOptions& solver = {});

struct TrainConfig {
  LossConfig loss;
  BackwardMode backward;
  Index epochs = 1000;
  OptimizerState optimizer;
  std::uint64_t rng_seed = 0;
  /// Stop when the relative loss change over convergence_window steps falls
  /// below this.
  double convergence_tolerance = 1e-6;
  Index convergence_window = 10;
  SolverOptions solver;
};

struct TraceEntry {
  Index step = 0;
  LossTerms terms;
};

struct TrainResult {
  enum class Status { kConverged, kEpochCap, kFailed };

  Status status = Status::kEpochCap;
  EdgeParameters params;
  std::vector<TraceEntry> trace;
  AssignmentMatrix<double> assignments;  // from the final parameters
  LabelImage labels;                     // seed labels, winner-take-all
  std::string failure;                   // set when status == kFailed
  ExitCode failure_code = ExitCode::kOk;
};

/// Gradient descent (Adam) on one parameter per edge. Solver failures stop
/// training; the trace up to that point is kept in the result.
TrainResult train_per_edge(const TrainingProblem& problem, const TrainConfig& config,
                           std::optional<EdgeParameters> initial = std::nullopt);

/// w_ij = exp(-beta (I_i - I_j)^2).
EdgeWeights<double> grady_weights(const LatticeGraph& graph, const Image<double>& image,
                                  double beta);

/// Classic Random Walker with exponentiated intensity differences.
Diffusion<double> grady_baseline(const Image<double>& image, const SeedSet& seeds, double beta,
                                 const SolverOptions& options = {});

}  // namespace diffwalker
