#pragma once

#include <filesystem>
#include <optional>

#include <nlohmann/json.hpp>

#include "tube_rmpc/cli/config.hpp"

namespace tube_rmpc::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitError = 1,
  kExitAssumption = 2,
  kExitTerminal = 3,
  kExitInfeasible = 4,
};

struct PipelineOptions {
  // Last stage to run; prerequisites run first. kAll runs everything the
  // config describes.
  Stage stage = Stage::kAll;
  bool write_artifacts = true;
  int workers = 0;  // 0: worker_count()
  // Previously prepared controller; skips container, terminal and prepare.
  std::optional<std::filesystem::path> controller_file;
};

struct PipelineResult {
  int exit_code = kExitOk;
  nlohmann::json report;
};

// Runs the requested stages and, when enabled, writes every artifact plus
// report.json into cfg.output_dir. Library errors are caught and mapped onto
// exit codes; the report's "error" entry names the failing stage and the
// violated condition.
PipelineResult run_pipeline(const RunConfig& cfg, const PipelineOptions& options = {});

}  // namespace tube_rmpc::cli
