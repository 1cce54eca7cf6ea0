#include "diffwalker/commands.hpp"

#include <algorithm>
#include <chrono>
#include <optional>
#include <ostream>
#include <string>

#include "diffwalker/diffusion.hpp"
#include "diffwalker/errors.hpp"
#include "diffwalker/io.hpp"
#include "diffwalker/learning.hpp"
#include "diffwalker/metrics.hpp"
#include "diffwalker/seeding.hpp"

namespace diffwalker::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class CommandError : public Error {
 public:
  CommandError(const std::string& what, ExitCode code) : Error(what), code_(code) {}
  ExitCode exit_code() const noexcept override { return code_; }

 private:
  ExitCode code_;
};

const json& defaults_for(const std::string& command) {
  static const json solve = {{"weights", ""},       {"image", ""},
                             {"beta", nullptr},     {"seeds", ""},
                             {"solver", "auto"},    {"cg_tolerance", 1e-10},
                             {"iterative_threshold", 512 * 512},
                             {"upsample", false}};
  static const json train = {{"image", ""},
                             {"gt", ""},
                             {"seeds", ""},
                             {"seed_mode", "sparse"},
                             {"mode", "exact"},
                             {"n", kDefaultSampleCount},
                             {"rescale", false},
                             {"epochs", 1000},
                             {"loss", "side-ce"},
                             {"alpha", 1e-2},
                             {"gamma", 1e-5},
                             {"barrier_alpha", 1e-5},
                             {"barrier_beta", 1e-5},
                             {"learning_rate", 1e-2},
                             {"convergence_tolerance", 1e-6},
                             {"tolerance", kDefaultTolerance},
                             {"rng_seed", 0}};
  static const json seed = {{"gt", ""}, {"mode", "sparse"}, {"rng_seed", 0}};
  static const json eval = {{"pred", ""}, {"gt", ""}, {"tolerance", kDefaultTolerance}};
  static const json watershed = {{"boundary", ""}, {"seeds", ""}};
  static const json errormap = {{"pred", ""}, {"gt", ""}};
  if (command == "solve") return solve;
  if (command == "train") return train;
  if (command == "seed") return seed;
  if (command == "eval") return eval;
  if (command == "watershed") return watershed;
  if (command == "errormap") return errormap;
  throw ValidationError("unknown command '" + command + "'");
}

std::string require_path(const json& config, const char* key) {
  const std::string path = config.at(key).get<std::string>();
  if (path.empty()) throw ValidationError(std::string("--") + key + " is required");
  return path;
}

SeedMode parse_seed_mode(const std::string& mode) {
  if (mode == "sparse") return SeedMode::kSparse;
  if (mode == "extended") return SeedMode::kExtended;
  throw ValidationError("seed mode must be sparse or extended, got '" + mode + "'");
}

SolverOptions solver_options(const json& config) {
  SolverOptions options;
  const std::string method = config.at("solver").get<std::string>();
  if (method == "auto") {
    options.method = SolverOptions::Method::kAuto;
  } else if (method == "direct") {
    options.method = SolverOptions::Method::kDirect;
  } else if (method == "iterative") {
    options.method = SolverOptions::Method::kIterative;
  } else {
    throw ValidationError("solver must be auto, direct or iterative");
  }
  options.cg_tolerance = config.at("cg_tolerance").get<double>();
  options.iterative_threshold = config.at("iterative_threshold").get<Index>();
  if (options.method != SolverOptions::Method::kDirect) {
    options.row_sum_tolerance = std::max(options.row_sum_tolerance, 10.0 * options.cg_tolerance);
  }
  return options;
}

void run_solve(const json& config, const fs::path& out) {
  const std::string weights_path = config.at("weights").get<std::string>();
  const std::string image_path = config.at("image").get<std::string>();
  const bool has_beta = !config.at("beta").is_null();
  if (weights_path.empty() == (image_path.empty() || !has_beta)) {
    throw ValidationError("give exactly one of --weights or --image with --beta");
  }

  std::optional<LatticeGraph> graph;
  EdgeWeights<double> weights;
  if (!weights_path.empty()) {
    auto file = io::read_weights(weights_path);
    graph.emplace(file.height, file.width);
    weights = std::move(file.weights);
  } else {
    const Image<double> image = io::read_image(image_path);
    graph.emplace(image.rows(), image.cols());
    weights = grady_weights(*graph, image, config.at("beta").get<double>());
  }
  const SeedSet seeds = io::read_seeds(require_path(config, "seeds"), *graph);

  const auto blocks = assemble_blocks(*graph, weights, seeds);
  const auto result = solve_rw(blocks, solver_options(config));
  const Index h = graph->height();
  const Index w = graph->width();
  io::write_assignments(out / "assignments.csv", h, w, result.assignments);
  io::write_label_image(out / "labels.pgm", label(result.assignments, h, w));
  io::write_real_grid(out / "entropy.csv", entropy_map(result.assignments, h, w));
  if (config.at("upsample").get<bool>()) {
    const auto up = upsample_assignments(result.assignments, h, w, 2 * h, 2 * w);
    io::write_assignments(out / "assignments_2x.csv", 2 * h, 2 * w, up);
    io::write_label_image(out / "labels_2x.pgm", label(up, 2 * h, 2 * w));
  }
  io::write_json(out / "solve_report.json", io::to_json(result.report));
}

void run_train(const json& config, const fs::path& out, std::ostream& log) {
  const LabelImage gt = io::read_label_image(require_path(config, "gt"));
  const LatticeGraph graph(gt.rows(), gt.cols());
  const std::string image_path = config.at("image").get<std::string>();
  if (!image_path.empty()) {
    const Image<double> image = io::read_image(image_path);
    if (image.rows() != gt.rows() || image.cols() != gt.cols()) {
      throw ValidationError("image and ground truth differ in shape");
    }
  }

  const auto rng_seed = config.at("rng_seed").get<std::uint64_t>();
  const std::string seeds_path = config.at("seeds").get<std::string>();
  const SeedSet seeds = seeds_path.empty()
                            ? oracle_seeds(gt, parse_seed_mode(config.at("seed_mode")), rng_seed).seeds
                            : io::read_seeds(seeds_path, graph);

  TrainConfig train;
  const std::string mode = config.at("mode").get<std::string>();
  const auto n = config.at("n").get<Index>();
  if (mode == "exact") {
    train.backward = BackwardMode::exact();
  } else if (mode == "sampled" || mode == "pruned") {
    if (n < 1 || n > graph.edge_count()) {
      throw ValidationError("--n must lie in [1, " + std::to_string(graph.edge_count()) +
                            "] for this image, got " + std::to_string(n));
    }
    train.backward = mode == "sampled" ? BackwardMode::sampled(n) : BackwardMode::pruned(n);
  } else {
    throw ValidationError("--mode must be exact, sampled or pruned");
  }
  train.backward.rescale = config.at("rescale").get<bool>();

  const std::string loss = config.at("loss").get<std::string>();
  if (loss == "side-ce") {
    train.loss.variant = LossConfig::Variant::kSideCrossEntropy;
  } else if (loss == "log-barrier") {
    train.loss.variant = LossConfig::Variant::kLogBarrier;
  } else {
    throw ValidationError("--loss must be side-ce or log-barrier");
  }
  train.loss.alpha = config.at("alpha").get<double>();
  train.loss.gamma = config.at("gamma").get<double>();
  train.loss.barrier_alpha = config.at("barrier_alpha").get<double>();
  train.loss.barrier_beta = config.at("barrier_beta").get<double>();
  if (train.loss.alpha < 0 || train.loss.gamma < 0 || train.loss.barrier_alpha < 0 ||
      train.loss.barrier_beta < 0) {
    throw ValidationError("loss coefficients must be nonnegative");
  }
  train.epochs = config.at("epochs").get<Index>();
  train.optimizer.learning_rate = config.at("learning_rate").get<double>();
  train.convergence_tolerance = config.at("convergence_tolerance").get<double>();
  train.rng_seed = rng_seed;

  const TrainingProblem problem = make_training_problem(gt, seeds);
  const TrainResult result = train_per_edge(problem, train);

  std::string trace = "step,loss,ce,side,reg\n";
  for (const auto& entry : result.trace) {
    trace += std::to_string(entry.step) + "," + io::format_double(entry.terms.total) + "," +
             io::format_double(entry.terms.ce) + "," + io::format_double(entry.terms.side) + "," +
             io::format_double(entry.terms.reg) + "\n";
  }
  io::write_text(out / "trace.csv", trace);
  io::write_weights(out / "weights.bin", graph, result.params.weights());
  io::write_seeds(out / "seeds.csv", graph, seeds);
  if (result.status == TrainResult::Status::kFailed) {
    log << "training aborted after " << result.trace.size() << " steps: " << result.failure << "\n";
    throw CommandError(result.failure, result.failure_code);
  }

  // Map seed labels back to ground-truth ids for evaluation output.
  LabelImage pred = result.labels;
  std::vector<std::int32_t> id_of_label(static_cast<std::size_t>(seeds.label_count()));
  for (const auto& s : seeds.entries()) id_of_label[static_cast<std::size_t>(s.label)] = gt.data()[s.vertex];
  for (Index i = 0; i < pred.size(); ++i) pred.data()[i] = id_of_label[static_cast<std::size_t>(pred.data()[i])];
  io::write_label_image(out / "labels.pgm", pred);

  json report = io::to_json(evaluate(pred, gt, config.at("tolerance").get<int>()));
  report["steps"] = result.trace.size();
  report["status"] = result.status == TrainResult::Status::kConverged ? "converged" : "epoch-cap";
  io::write_json(out / "eval.json", report);
}

void run_seed(const json& config, const fs::path& out) {
  const LabelImage gt = io::read_label_image(require_path(config, "gt"));
  const auto seeds = oracle_seeds(gt, parse_seed_mode(config.at("mode")),
                                  config.at("rng_seed").get<std::uint64_t>());
  io::write_seeds(out / "seeds.csv", LatticeGraph(gt.rows(), gt.cols()), seeds.seeds);
}

void run_eval(const json& config, const fs::path& out) {
  const LabelImage pred = io::read_label_image(require_path(config, "pred"));
  const LabelImage gt = io::read_label_image(require_path(config, "gt"));
  io::write_json(out / "eval.json", io::to_json(evaluate(pred, gt, config.at("tolerance").get<int>())));
}

void run_watershed(const json& config, const fs::path& out) {
  const Image<double> boundary = io::read_real_image(require_path(config, "boundary"));
  const LatticeGraph graph(boundary.rows(), boundary.cols());
  const SeedSet seeds = io::read_seeds(require_path(config, "seeds"), graph);
  const WatershedResult result = seeded_watershed(boundary, seeds);
  if (result.unlabeled > 0) {
    throw SingularSystemError(std::to_string(result.unlabeled) + " pixels are not reachable from any seed", -1);
  }
  io::write_label_image(out / "labels.pgm", result.labels);
}

void run_errormap(const json& config, const fs::path& out) {
  const LabelImage pred = io::read_label_image(require_path(config, "pred"));
  const LabelImage gt = io::read_label_image(require_path(config, "gt"));
  io::write_mask(out / "error_map.pgm", error_map(pred, gt));
}

}  // namespace

RunConfig complete(RunConfig config) {
  if (!config.is_object() || !config.contains("command") || !config["command"].is_string()) {
    throw ValidationError("run config needs a string 'command' field");
  }
  const json& defaults = defaults_for(config["command"].get<std::string>());
  for (const auto& [key, value] : config.items()) {
    if (key != "command" && !defaults.contains(key)) {
      throw ValidationError("unknown parameter '" + key + "' for command " +
                            config["command"].get<std::string>());
    }
  }
  for (const auto& [key, value] : defaults.items()) {
    if (!config.contains(key)) config[key] = value;
  }
  return config;
}

int run(const RunConfig& raw, const fs::path& out_dir, std::ostream& log) {
  try {
    const RunConfig config = complete(raw);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

    const std::string command = config.at("command").get<std::string>();
    const auto start = std::chrono::steady_clock::now();
    if (command == "solve") {
      run_solve(config, out_dir);
    } else if (command == "train") {
      run_train(config, out_dir, log);
    } else if (command == "seed") {
      run_seed(config, out_dir);
    } else if (command == "eval") {
      run_eval(config, out_dir);
    } else if (command == "watershed") {
      run_watershed(config, out_dir);
    } else {
      run_errormap(config, out_dir);
    }
    io::write_json(out_dir / kRunConfigFile, config);
    log << command << ": done in "
        << std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()
        << " s\n";
    return static_cast<int>(ExitCode::kOk);
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return static_cast<int>(e.exit_code());
  } catch (const nlohmann::json::exception& e) {
    log << "error: bad run config: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kValidation);
  } catch (const fs::filesystem_error& e) {
    log << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kIo);
  }
}

int replay(const fs::path& config_file, const fs::path& out_dir, std::ostream& log) {
  try {
    return run(io::read_json(config_file), out_dir, log);
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return static_cast<int>(e.exit_code());
  }
}

}  // namespace diffwalker::cli
