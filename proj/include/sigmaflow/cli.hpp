#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <string>

#include "json.hpp"
#include "sigmaflow/config.hpp"

namespace sigmaflow {

enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,
  kExitConfigError = 2,
  kExitConeCollapse = 3,
  kExitSolverError = 4,
};

/// Files produced by one mode, relative to the output directory. Nothing
/// touches the disk until the mode has finished.
struct Artifacts {
  std::map<std::string, std::string> files;
  nlohmann::json summary;
  int exit_code = kExitOk;
};

/// Runs one mode in memory. Throws ConfigError (and InvalidInput) for
/// problems attributable to the configuration; solver failures are folded
/// into the summary and the exit code.
Artifacts execute(const Config& config, Mode mode, std::uint64_t seed, int jobs = 1);

/// Writes every file plus summary.json under `dir`.
void write_artifacts(const Artifacts& a, const std::filesystem::path& dir);

/// Full command line: --config, --out, --mode, --seed, --jobs. The output
/// directory falls back to $SIGMAFLOW_OUT_DIR, then ./out.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sigmaflow
