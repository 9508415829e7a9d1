#include "tube_rmpc/cli/config.hpp"

#include <fstream>

#include <Eigen/Cholesky>

#include "tube_rmpc/geometry/io.hpp"

namespace tube_rmpc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::kValidate: return "validate";
    case Stage::kContainer: return "container-opt";
    case Stage::kTerminal: return "terminal";
    case Stage::kPrepare: return "prepare";
    case Stage::kSimulate: return "simulate";
    case Stage::kRoa: return "roa";
    case Stage::kAll: return "pipeline";
  }
  return "unknown";
}

Stage stage_from_string(std::string_view name) {
  for (Stage s : {Stage::kValidate, Stage::kContainer, Stage::kTerminal, Stage::kPrepare,
                  Stage::kSimulate, Stage::kRoa, Stage::kAll}) {
    if (to_string(s) == name) return s;
  }
  throw ConfigError("unknown stage '" + std::string(name) + "'");
}

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

void set_family(WmRelaxation& relax, const std::string& name, bool on) {
  if (name == "Z") relax.keep_Z = on;
  else if (name == "Z_m0") relax.keep_Z_m0 = on;
  else if (name == "S_inf0") relax.keep_S_inf0 = on;
  else if (name == "S_chain") relax.keep_S_chain = on;
  else throw ConfigError("unknown relaxation family '" + name + "'");
}

ContainerConfig parse_container(const json& j) {
  ContainerConfig c;
  if (j.contains("grid")) {
    const auto grid = j.at("grid").get<std::vector<int>>();
    if (grid.size() != 2 || grid[0] < 2 || grid[1] < 2) {
      throw ConfigError("container.grid must be two integers ≥ 2");
    }
    c.n_theta = grid[0];
    c.n_phi = grid[1];
  }
  c.optimize = get_or(j, "optimize", true);
  c.use = get_or<std::string>(j, "use", c.optimize ? "Z2" : "Z1");
  if (c.use != "Z0" && c.use != "Z1" && c.use != "Z2") {
    throw ConfigError("container.use must be Z0, Z1 or Z2");
  }
  if (c.use == "Z2" && !c.optimize) {
    throw ConfigError("container.use = Z2 requires container.optimize");
  }
  if (j.contains("relax")) {
    const json& r = j.at("relax");
    c.relax.N_i = get_or(r, "N_i", c.relax.N_i);
    c.relax.N_j = get_or(r, "N_j", c.relax.N_j);
    if (c.relax.N_i < 1 || c.relax.N_j < 0) throw ConfigError("relax.N_i must be ≥ 1");
    if (r.contains("keep")) {
      for (const char* f : {"Z", "Z_m0", "S_inf0", "S_chain"}) set_family(c.relax, f, false);
      for (const auto& f : r.at("keep")) set_family(c.relax, f.get<std::string>(), true);
    }
    if (r.contains("drop")) {
      for (const auto& f : r.at("drop")) set_family(c.relax, f.get<std::string>(), false);
    }
    c.relax.weights = get_or(r, "weights", std::vector<double>{});
  }
  return c;
}

SimConfig parse_sim(const json& j, int n) {
  SimConfig s;
  s.x0 = geometry::vector_from_json(j.at("x0"));
  if (s.x0.size() != n) throw ConfigError("sim.x0 has the wrong dimension");
  s.T = get_or(j, "T", s.T);
  if (s.T < 1) throw ConfigError("sim.T must be ≥ 1");
  try {
    s.policy.kind = policy_from_string(get_or<std::string>(j, "policy", "uniform"));
  } catch (const std::exception& e) {
    throw ConfigError(std::string("sim.policy: ") + e.what());
  }
  s.policy.seed = get_or<std::uint64_t>(j, "seed", 0);
  if (j.contains("theta")) s.policy.theta = geometry::vector_from_json(j.at("theta"));
  s.policy.theta_walk = get_or(j, "theta_walk", false);
  if (j.contains("sequence")) {
    for (const auto& w : j.at("sequence")) {
      s.policy.sequence.push_back(geometry::vector_from_json(w));
    }
  }
  if (s.policy.kind == PolicyKind::kFixedSequence && s.policy.sequence.empty()) {
    throw ConfigError("sim.policy = fixed needs sim.sequence");
  }
  s.snapshots = get_or(j, "snapshots", std::vector<int>{});
  return s;
}

RoaConfig parse_roa(const json& j, int n) {
  RoaConfig r;
  const json& box = j.at("box");
  if (static_cast<int>(box.size()) != n) throw ConfigError("roa.box needs one interval per state");
  r.grid.lo.resize(n);
  r.grid.hi.resize(n);
  for (int i = 0; i < n; ++i) {
    r.grid.lo(i) = box[i].at(0).get<double>();
    r.grid.hi(i) = box[i].at(1).get<double>();
    if (!(r.grid.lo(i) < r.grid.hi(i))) throw ConfigError("roa.box interval is empty");
  }
  const json& res = j.at("resolution");
  r.grid.resolution = res.is_array() ? res.get<std::vector<int>>()
                                     : std::vector<int>(n, res.get<int>());
  if (static_cast<int>(r.grid.resolution.size()) != n) {
    throw ConfigError("roa.resolution needs one entry per state");
  }
  for (int k : r.grid.resolution) {
    if (k < 10) throw ConfigError("roa.resolution must be ≥ 10");
  }
  r.grid.refine = get_or(j, "refine", true);
  r.containers = get_or(j, "containers", std::vector<std::string>{});
  for (const auto& c : r.containers) {
    if (c != "Z0" && c != "Z1" && c != "Z2") {
      throw ConfigError("roa.containers entries must be Z0, Z1 or Z2");
    }
  }
  return r;
}

}  // namespace

RunConfig parse_config(const json& j, const fs::path& base_dir) {
  RunConfig cfg;
  try {
    const json& sys = j.at("system");
    if (sys.is_string()) {
      const fs::path p = base_dir / sys.get<std::string>();
      if (!fs::exists(p)) throw ConfigError("system file not found: " + p.string());
      cfg.system_json = read_json(p);
    } else {
      cfg.system_json = sys;
    }
    cfg.system = system_from_json(cfg.system_json);
    const int n = cfg.system.n();

    if (j.contains("container")) cfg.container = parse_container(j.at("container"));

    if (j.contains("terminal")) {
      const json& t = j.at("terminal");
      cfg.terminal.gamma0 = get_or(t, "gamma0", cfg.terminal.gamma0);
      cfg.terminal.options.k_max = get_or(t, "k_max", cfg.terminal.options.k_max);
      cfg.terminal.options.max_iterations =
          get_or(t, "max_iterations", cfg.terminal.options.max_iterations);
      if (!(cfg.terminal.gamma0 > 0.0)) throw ConfigError("terminal.gamma0 must be positive");
      if (cfg.terminal.options.k_max < 1) throw ConfigError("terminal.k_max must be ≥ 1");
    }

    cfg.controller.psi = Matrix::Identity(cfg.system.m(), cfg.system.m());
    if (j.contains("controller")) {
      const json& c = j.at("controller");
      cfg.controller.N = get_or(c, "N", cfg.controller.N);
      if (c.contains("psi")) cfg.controller.psi = geometry::matrix_from_json(c.at("psi"));
    }
    if (cfg.controller.N < 1) throw ConfigError("controller.N must be ≥ 1");
    const Matrix& psi = cfg.controller.psi;
    if (psi.rows() != cfg.system.m() || psi.cols() != cfg.system.m() ||
        !psi.isApprox(psi.transpose()) || Eigen::LLT<Matrix>(psi).info() != Eigen::Success) {
      throw ConfigError("controller.psi must be symmetric positive definite of size m");
    }

    if (j.contains("sim")) cfg.sim = parse_sim(j.at("sim"), n);
    if (j.contains("roa")) cfg.roa = parse_roa(j.at("roa"), n);
    cfg.output_dir = get_or<std::string>(j, "output_dir", "out");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  RunConfig cfg = parse_config(read_json(path), path.parent_path());
  cfg.source = path;
  return cfg;
}

}  // namespace tube_rmpc::cli
