#pragma once

#include <filesystem>
#include <iosfwd>

#include "json.hpp"

namespace diffwalker::cli {

/// Complete description of one command invocation: {"command": ..., flags}.
/// Output location and thread count are not part of it; neither changes the
/// bytes written.
using RunConfig = nlohmann::json;

inline constexpr const char* kRunConfigFile = "run_config.json";

/// Fills every omitted parameter of `config` with its default, so the stored
/// RunConfig pins the whole run. Throws ValidationError on unknown commands.
RunConfig complete(RunConfig config);

/// Runs the command, writes its outputs and run_config.json into out_dir, and
/// returns the process exit code. Errors are reported on `log`.
int run(const RunConfig& config, const std::filesystem::path& out_dir, std::ostream& log);

/// Re-runs a stored run_config.json into out_dir.
int replay(const std::filesystem::path& config_file, const std::filesystem::path& out_dir,
           std::ostream& log);

}  // namespace diffwalker::cli
