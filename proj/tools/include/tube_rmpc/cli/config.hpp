#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tube_rmpc/container.hpp"
#include "tube_rmpc/model.hpp"
#include "tube_rmpc/sim.hpp"
#include "tube_rmpc/terminal.hpp"

namespace tube_rmpc::cli {

// Pipeline stages in execution order. simulate and roa both depend on
// prepare and are independent of each other.
enum class Stage { kValidate, kContainer, kTerminal, kPrepare, kSimulate, kRoa, kAll };

std::string_view to_string(Stage stage);
Stage stage_from_string(std::string_view name);

struct ContainerConfig {
  int n_theta = 5;
  int n_phi = 5;
  bool optimize = true;
  WmRelaxation relax;
  // Which container the controller is built on: "Z0", "Z1" or "Z2".
  std::string use = "Z2";
};

struct TerminalConfig {
  double gamma0 = 10.0;
  TerminalOptions options;
};

struct ControllerConfig {
  int N = 10;
  Matrix psi;
};

struct SimConfig {
  Vector x0;
  int T = 30;
  DisturbancePolicy policy;
  std::vector<int> snapshots;
};

struct RoaConfig {
  RoaGrid grid;
  std::vector<std::string> containers;
};

struct RunConfig {
  std::filesystem::path source;  // file the config was read from, if any
  UncertainSystem system;
  nlohmann::json system_json;
  ContainerConfig container;
  TerminalConfig terminal;
  ControllerConfig controller;
  std::optional<SimConfig> sim;
  std::optional<RoaConfig> roa;
  std::filesystem::path output_dir = "out";
};

// Thrown for malformed or inconsistent configuration documents.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// `system` may be an inline object or a path relative to `base_dir`.
RunConfig parse_config(const nlohmann::json& j,
                       const std::filesystem::path& base_dir = ".");
RunConfig load_config(const std::filesystem::path& path);

}  // namespace tube_rmpc::cli
