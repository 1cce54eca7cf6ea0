// Command-line front end: solve, train, seed, eval, watershed, errormap, replay.

#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "diffwalker/commands.hpp"
#include "diffwalker/errors.hpp"
#include "diffwalker/gradient.hpp"
#include "diffwalker/metrics.hpp"
#include "diffwalker/parallel.hpp"

namespace {

using diffwalker::cli::RunConfig;

struct SolveFlags {
  std::string weights, image, seeds, solver = "auto";
  double beta = 0.0;
  double cg_tolerance = 1e-10;
  long iterative_threshold = 512 * 512;
  bool upsample = false;
};

struct TrainFlags {
  std::string image, gt, seeds, seed_mode = "sparse", mode = "exact", loss = "side-ce";
  long n = diffwalker::kDefaultSampleCount;
  long epochs = 1000;
  bool rescale = false;
  double alpha = 1e-2, gamma = 1e-5, barrier_alpha = 1e-5, barrier_beta = 1e-5;
  double learning_rate = 1e-2, convergence_tolerance = 1e-6;
  int tolerance = diffwalker::kDefaultTolerance;
  std::uint64_t rng_seed = 0;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random Walker segmentation with differentiable edge weights"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string out_dir = ".";
  int threads = 0;
  app.add_option("--threads", threads,
                 "Worker threads (default: hardware concurrency; DIFFWALKER_THREADS overrides)");

  SolveFlags solve;
  auto* solve_cmd = app.add_subcommand("solve", "Random Walker probabilities, labels and entropy");
  solve_cmd->add_option("--weights", solve.weights, "Edge weight file (binary, canonical order)");
  solve_cmd->add_option("--image", solve.image, "Grayscale PGM; weights exp(-beta*dI^2)");
  auto* beta_opt = solve_cmd->add_option("--beta", solve.beta, "Intensity contrast parameter");
  solve_cmd->add_option("--seeds", solve.seeds, "Seeds CSV (row,col,label)")->required();
  solve_cmd->add_option("--solver", solve.solver, "auto | direct | iterative")
      ->check(CLI::IsMember({"auto", "direct", "iterative"}));
  solve_cmd->add_option("--cg-tolerance", solve.cg_tolerance, "PCG relative residual target");
  solve_cmd->add_option("--iterative-threshold", solve.iterative_threshold,
                        "Unknown count above which auto uses PCG");
  solve_cmd->add_flag("--upsample", solve.upsample, "Also write 2x bilinear upsampled outputs");
  solve_cmd->add_option("--out-dir", out_dir, "Output directory");

  TrainFlags train;
  auto* train_cmd = app.add_subcommand("train", "Fit one weight per edge to a ground truth");
  train_cmd->add_option("--image", train.image, "Grayscale PGM (shape check only)");
  train_cmd->add_option("--gt", train.gt, "Ground-truth label image (16-bit PGM or CSV)")->required();
  train_cmd->add_option("--seeds", train.seeds, "Seeds CSV; oracle seeds when omitted");
  train_cmd->add_option("--seed-mode", train.seed_mode, "Oracle seeding: sparse | extended")
      ->check(CLI::IsMember({"sparse", "extended"}));
  train_cmd->add_option("--mode", train.mode, "Backward: exact | sampled | pruned")
      ->check(CLI::IsMember({"exact", "sampled", "pruned"}));
  train_cmd->add_option("--n", train.n, "Sampled edges per step");
  train_cmd->add_flag("--rescale", train.rescale, "Scale sampled gradients by |E|/n");
  train_cmd->add_option("--epochs", train.epochs, "Maximum optimizer steps");
  train_cmd->add_option("--loss", train.loss, "side-ce | log-barrier")
      ->check(CLI::IsMember({"side-ce", "log-barrier"}));
  train_cmd->add_option("--alpha", train.alpha, "Side cross-entropy weight");
  train_cmd->add_option("--gamma", train.gamma, "L2 decay with the side loss");
  train_cmd->add_option("--barrier-alpha", train.barrier_alpha, "Log-barrier weight");
  train_cmd->add_option("--barrier-beta", train.barrier_beta, "L2 decay with the log barrier");
  train_cmd->add_option("--learning-rate", train.learning_rate, "Adam step size");
  train_cmd->add_option("--convergence-tolerance", train.convergence_tolerance,
                        "Relative loss change over 10 steps that stops training");
  train_cmd->add_option("--tolerance", train.tolerance, "Boundary tolerance for the final report");
  train_cmd->add_option("--rng-seed", train.rng_seed, "Seed for oracle seeds and edge sampling");
  train_cmd->add_option("--out-dir", out_dir, "Output directory");

  std::string seed_gt, seed_mode = "sparse";
  std::uint64_t seed_rng = 0;
  auto* seed_cmd = app.add_subcommand("seed", "Oracle seeds from a ground truth");
  seed_cmd->add_option("--gt", seed_gt, "Ground-truth label image")->required();
  seed_cmd->add_option("--mode", seed_mode, "sparse | extended")
      ->check(CLI::IsMember({"sparse", "extended"}));
  seed_cmd->add_option("--rng-seed", seed_rng, "Random seed");
  seed_cmd->add_option("--out-dir", out_dir, "Output directory");

  std::string pred, gt;
  int tolerance = diffwalker::kDefaultTolerance;
  auto* eval_cmd = app.add_subcommand("eval", "VOI and ARAND against a ground truth");
  eval_cmd->add_option("--pred", pred, "Predicted label image")->required();
  eval_cmd->add_option("--gt", gt, "Ground-truth label image")->required();
  eval_cmd->add_option("--tolerance", tolerance, "Boundary tolerance in pixels");
  eval_cmd->add_option("--out-dir", out_dir, "Output directory");

  std::string boundary, ws_seeds;
  auto* ws_cmd = app.add_subcommand("watershed", "Seeded watershed on a boundary map");
  ws_cmd->add_option("--boundary", boundary, "Boundary map (PGM or CSV grid)")->required();
  ws_cmd->add_option("--seeds", ws_seeds, "Seeds CSV")->required();
  ws_cmd->add_option("--out-dir", out_dir, "Output directory");

  std::string em_pred, em_gt;
  auto* em_cmd = app.add_subcommand("errormap", "Mislabeled pixels under majority matching");
  em_cmd->add_option("--pred", em_pred, "Predicted label image")->required();
  em_cmd->add_option("--gt", em_gt, "Ground-truth label image")->required();
  em_cmd->add_option("--out-dir", out_dir, "Output directory");

  std::string config_file;
  auto* replay_cmd = app.add_subcommand("replay", "Re-run a stored run_config.json");
  replay_cmd->add_option("config", config_file, "run_config.json")->required();
  replay_cmd->add_option("--out-dir", out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(diffwalker::ExitCode::kValidation);
  }

  if (const char* env = std::getenv("DIFFWALKER_THREADS")) {
    threads = std::atoi(env);
  }
  if (threads > 0) diffwalker::set_thread_count(threads);

  RunConfig config;
  if (*solve_cmd) {
    config = {{"command", "solve"},       {"weights", solve.weights},
              {"image", solve.image},     {"seeds", solve.seeds},
              {"solver", solve.solver},   {"cg_tolerance", solve.cg_tolerance},
              {"iterative_threshold", solve.iterative_threshold},
              {"upsample", solve.upsample}};
    config["beta"] = beta_opt->count() ? RunConfig(solve.beta) : RunConfig(nullptr);
  } else if (*train_cmd) {
    config = {{"command", "train"},
              {"image", train.image},
              {"gt", train.gt},
              {"seeds", train.seeds},
              {"seed_mode", train.seed_mode},
              {"mode", train.mode},
              {"n", train.n},
              {"rescale", train.rescale},
              {"epochs", train.epochs},
              {"loss", train.loss},
              {"alpha", train.alpha},
              {"gamma", train.gamma},
              {"barrier_alpha", train.barrier_alpha},
              {"barrier_beta", train.barrier_beta},
              {"learning_rate", train.learning_rate},
              {"convergence_tolerance", train.convergence_tolerance},
              {"tolerance", train.tolerance},
              {"rng_seed", train.rng_seed}};
  } else if (*seed_cmd) {
    config = {{"command", "seed"}, {"gt", seed_gt}, {"mode", seed_mode}, {"rng_seed", seed_rng}};
  } else if (*eval_cmd) {
    config = {{"command", "eval"}, {"pred", pred}, {"gt", gt}, {"tolerance", tolerance}};
  } else if (*ws_cmd) {
    config = {{"command", "watershed"}, {"boundary", boundary}, {"seeds", ws_seeds}};
  } else if (*em_cmd) {
    config = {{"command", "errormap"}, {"pred", em_pred}, {"gt", em_gt}};
  } else {
    return diffwalker::cli::replay(config_file, out_dir, std::cerr);
  }
  return diffwalker::cli::run(config, out_dir, std::cerr);
}
