#include "tube_rmpc/cli/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <map>
#include <sstream>

#include "tube_rmpc/controller.hpp"
#include "tube_rmpc/error.hpp"
#include "tube_rmpc/geometry/io.hpp"
#include "tube_rmpc/parallel.hpp"

namespace tube_rmpc::cli {

namespace fs = std::filesystem;
using geometry::format_double;
using nlohmann::json;

namespace {

// Area reported in the literature for the homothetic-tube controller on the
// same example. Printed for reference only.
constexpr double kHomotheticTubeRoaArea = 3554.6;

// Raised inside a stage when the outcome maps onto a specific exit code.
struct StageFailure {
  int exit_code;
  std::string constraint;
  std::string message;
};

struct ContainerState {
  const Container* container = nullptr;
  std::optional<TerminalSet> terminal;
  std::optional<ControllerData> controller;
};

class Runner {
 public:
  Runner(const RunConfig& cfg, const PipelineOptions& options)
      : cfg_(cfg), options_(options), out_dir_(cfg.output_dir) {
    workers_ = options.workers > 0 ? options.workers : worker_count();
  }

  PipelineResult run() {
    report_["stage"] = std::string(to_string(options_.stage));
    if (!cfg_.source.empty()) report_["config"] = cfg_.source.string();
    if (options_.write_artifacts) fs::create_directories(out_dir_);

    int code = kExitOk;
    Stage current = Stage::kValidate;
    try {
      current = Stage::kValidate;
      timed("validate", [&] { stage_validate(); });
      if (options_.controller_file) {
        load_controller();
      } else if (wants(Stage::kContainer)) {
        current = Stage::kContainer;
        timed("container-opt", [&] { stage_container(); });
        if (wants(Stage::kTerminal)) {
          current = Stage::kTerminal;
          timed("terminal", [&] { stage_terminal(); });
        }
        if (wants(Stage::kPrepare)) {
          current = Stage::kPrepare;
          timed("prepare", [&] { stage_prepare(); });
        }
      }
      if (runs(Stage::kSimulate) && cfg_.sim) {
        current = Stage::kSimulate;
        timed("simulate", [&] { stage_simulate(); });
      }
      if (runs(Stage::kRoa) && cfg_.roa) {
        current = Stage::kRoa;
        timed("roa", [&] { stage_roa(); });
      }
    } catch (const StageFailure& f) {
      code = f.exit_code;
      record_error(current, f.constraint, f.message);
    } catch (const Error& e) {
      code = exit_code_for(e.code());
      record_error(current, constraint_for(e.code()), e.what());
    } catch (const std::exception& e) {
      code = kExitError;
      record_error(current, "internal", e.what());
    }
    report_["exit_code"] = code;
    if (options_.write_artifacts) write_json(out_dir_ / "report.json", report_);
    return {code, report_};
  }

 private:
  bool wants(Stage s) const {
    return options_.stage == Stage::kAll || static_cast<int>(s) <= static_cast<int>(options_.stage);
  }
  // simulate and roa run only when asked for explicitly or as part of the
  // whole pipeline.
  bool runs(Stage s) const { return options_.stage == Stage::kAll || options_.stage == s; }

  template <typename F>
  void timed(const char* name, F&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    body();
    const auto t1 = std::chrono::steady_clock::now();
    report_["stages_run"].push_back(name);
    report_["timings_s"][name] = std::chrono::duration<double>(t1 - t0).count();
  }

  static int exit_code_for(ErrorCode code) {
    switch (code) {
      case ErrorCode::kAssumptionViolated: return kExitAssumption;
      case ErrorCode::kNoAdmissibleGamma:
      case ErrorCode::kEmptyTerminalSet: return kExitTerminal;
      case ErrorCode::kInfeasibleAt: return kExitInfeasible;
      default: return kExitError;
    }
  }

  static std::string constraint_for(ErrorCode code) {
    switch (code) {
      case ErrorCode::kNoAdmissibleGamma: return "A5:gamma_interval";
      case ErrorCode::kEmptyTerminalSet: return "A5:terminal_set";
      case ErrorCode::kIterationCap: return "A5:iteration_cap";
      case ErrorCode::kNoFiniteLambda: return "A5:lambda_infinity";
      case ErrorCode::kInfeasibleAt: return "online_qp";
      default: return std::string(to_string(code));
    }
  }

  void record_error(Stage stage, const std::string& constraint, const std::string& message) {
    report_["error"] = {{"stage", std::string(to_string(stage))},
                        {"constraint", constraint},
                        {"message", message}};
  }

  void write_json(const fs::path& path, const json& j) const {
    std::ofstream out(path);
    out << j.dump(2) << '\n';
  }

  void write_text(const fs::path& path, const std::string& text) const {
    std::ofstream out(path);
    out << text;
  }

  void write_vertices(const fs::path& path, const geometry::VPolytope& P) const {
    std::ofstream out(path);
    geometry::write_vertices_csv(out, P);
  }

  // ---- validate ----------------------------------------------------------

  void stage_validate() {
    const ValidationReport rep = validate(cfg_.system);
    json checks = json::array();
    for (const auto& c : rep.checks) {
      checks.push_back({{"id", c.id}, {"passed", c.passed}, {"detail", c.detail}});
    }
    report_["validate"] = {{"checks", checks}, {"warnings", rep.warnings}};
    if (const AssumptionCheck* bad = rep.first_failure()) {
      throw StageFailure{kExitAssumption, bad->id, bad->detail};
    }
  }

  // ---- container-opt -----------------------------------------------------

  void stage_container() {
    const ContainerConfig& cc = cfg_.container;
    json rep;
    if (cc.optimize) {
      chain_ = build_container_chain(cfg_.system, cc.n_theta, cc.n_phi, cc.relax);
    } else {
      ContainerChain chain;
      chain.Z0 = make_container(cfg_.system, default_container(cfg_.system.n(), cfg_.system.m(),
                                                               cc.n_theta, cc.n_phi));
      const geometry::HPolytope WM0 = geometry::facet_enum(chain.Z0.PZ_m);
      chain.Z1 = make_container(
          cfg_.system,
          container_preimage(cfg_.system.dP_vertices, WM0, preimage_box(cfg_.system.Z)));
      chain.WM0 = chain.Z0.PZ_m;
      chain_ = std::move(chain);
    }
    const std::vector<std::string> names =
        cc.optimize ? std::vector<std::string>{"Z0", "Z1", "Z2"}
                    : std::vector<std::string>{"Z0", "Z1"};
    json sets;
    for (const auto& name : names) {
      const Container& c = container(name);
      const double vol = geometry::volume(c.Z_m_vertices);
      const double area = geometry::volume(c.PZ_m);
      rep["volumes"][name] = vol;
      rep["md_image_areas"][name] = area;
      rep["facets"][name] = c.Z_m.num_facets();
      rep["vertices"][name] = c.Z_m_vertices.num_vertices();
      sets[name] = {{"Z_m", geometry::to_json(c.Z_m)},
                    {"Z_m_vertices", geometry::to_json(c.Z_m_vertices)},
                    {"X_m", geometry::to_json(c.X_m)},
                    {"md_image", geometry::to_json(c.PZ_m)}};
      if (options_.write_artifacts) {
        write_vertices(out_dir_ / (name + "_vertices.csv"), c.Z_m_vertices);
        write_vertices(out_dir_ / ("P" + name + "_vertices.csv"), c.PZ_m);
      }
    }
    if (cc.optimize) {
      rep["beta"] = geometry::vector_to_json(chain_->beta);
      sets["WM0"] = geometry::to_json(chain_->WM0);
      sets["WM_opt"] = geometry::to_json(chain_->WM_opt);
    }
    rep["used"] = cc.use;
    report_["container"] = rep;
    if (options_.write_artifacts) write_json(out_dir_ / "containers.json", sets);
  }

  const Container& container(const std::string& name) const {
    if (name == "Z0") return chain_->Z0;
    if (name == "Z1") return chain_->Z1;
    if (name == "Z2" && cfg_.container.optimize) return chain_->Z2;
    throw ConfigError("container " + name + " was not built");
  }

  ContainerState& state(const std::string& name) {
    ContainerState& s = states_[name];
    if (!s.container) s.container = &container(name);
    return s;
  }

  // ---- terminal ----------------------------------------------------------

  const TerminalSet& terminal_for(const std::string& name) {
    ContainerState& s = state(name);
    if (!s.terminal) {
      const double gamma0 = cfg_.terminal.gamma0;
      const GammaBounds bounds = gamma_bounds(cfg_.system, *s.container);
      if (!bounds.contains(gamma0)) {
        std::ostringstream os;
        os << "gamma0 = " << gamma0 << " outside [" << bounds.lo << ", " << bounds.hi
           << "] for " << name;
        throw StageFailure{kExitTerminal, "A5:gamma_interval", "NoAdmissibleGamma: " + os.str()};
      }
      s.terminal = output_admissible_set(cfg_.system, *s.container, gamma0,
                                         cfg_.terminal.options);
      bounds_[name] = bounds;
    }
    return *s.terminal;
  }

  void stage_terminal() {
    const std::string& name = cfg_.container.use;
    const TerminalSet& T = terminal_for(name);
    const GammaBounds& b = bounds_.at(name);
    report_["terminal"] = {
        {"container", name},
        {"gamma_bounds", {{"lo", b.lo}, {"hi", b.hi}, {"gamma_bar1", b.gamma_bar1},
                          {"gamma_bar2", b.gamma_bar2}}},
        {"gamma0", T.gamma0},
        {"gamma_used", T.gamma_used},
        {"gamma_inf", T.gamma_inf},
        {"lambda_inf", T.lambda_inf.value},
        {"lambda_inf_residual", T.lambda_inf.residual},
        {"iterations", T.iterations},
        {"steps", T.steps},
        {"restarts", T.gamma_trace.size()},
        {"facets", T.S_inf.num_facets()},
        {"converged", true},
    };
    if (options_.write_artifacts) {
      write_json(out_dir_ / "S_inf.json", {{"H", geometry::to_json(T.S_inf)},
                                           {"V", geometry::to_json(T.S_inf_vertices)}});
      write_vertices(out_dir_ / "S_inf_vertices.csv", T.S_inf_vertices);
      std::ostringstream os;
      os << "restart,gamma\n0," << format_double(T.gamma0) << '\n';
      for (std::size_t i = 0; i < T.gamma_trace.size(); ++i) {
        os << i + 1 << ',' << format_double(T.gamma_trace[i]) << '\n';
      }
      write_text(out_dir_ / "gamma_trace.csv", os.str());
    }
  }

  // ---- prepare -----------------------------------------------------------

  const ControllerData& controller_for(const std::string& name) {
    ContainerState& s = state(name);
    if (!s.controller) {
      const TerminalSet& T = terminal_for(name);
      s.controller = offline_prepare(cfg_.system, *s.container, T, cfg_.controller.N,
                                     cfg_.controller.psi);
    }
    return *s.controller;
  }

  void stage_prepare() {
    const ControllerData& d = controller_for(cfg_.container.use);
    used_ = &d;
    report_["controller"] = controller_summary(d);
    if (options_.write_artifacts) write_json(out_dir_ / "controller.json", controller_to_json(d));
  }

  static json controller_summary(const ControllerData& d) {
    return {{"N", d.N},
            {"variables", d.num_variables()},
            {"inequalities", d.num_constraints()},
            {"expected_inequalities", d.expected_constraints()},
            {"lcon", {{"Z_m", d.Z_m.num_facets()}, {"Z", d.Z.num_facets()},
                      {"S_inf", d.S_inf.num_facets()}}},
            {"gamma_inf", d.gamma_inf},
            {"lambda_inf", d.lambda_inf}};
  }

  void load_controller() {
    std::ifstream in(*options_.controller_file);
    if (!in) throw ConfigError("cannot open " + options_.controller_file->string());
    loaded_ = controller_from_json(json::parse(in));
    used_ = &*loaded_;
    report_["controller"] = controller_summary(*used_);
    report_["controller"]["source"] = options_.controller_file->string();
  }

  const ControllerData& used_controller() {
    if (!used_) stage_prepare();
    return *used_;
  }

  // ---- simulate ----------------------------------------------------------

  void stage_simulate() {
    const SimConfig& sc = *cfg_.sim;
    const ControllerData& d = used_controller();
    const SimulationTrace trace = run_closed_loop(cfg_.system, d, sc.x0, sc.T, sc.policy);

    // Constraint check on every applied pair and the cost decrease margin.
    double max_violation = -std::numeric_limits<double>::infinity();
    double worst_decrease = -std::numeric_limits<double>::infinity();
    double max_candidate_violation = 0.0;
    const Matrix& H = cfg_.system.Z.H();
    const Vector& h = cfg_.system.Z.h();
    for (std::size_t i = 0; i < trace.steps.size(); ++i) {
      const SimulationStep& s = trace.steps[i];
      if (!s.feasible) continue;
      Vector xu(d.n + d.m);
      xu << s.x, s.u;
      max_violation = std::max(max_violation, (H * xu - h).maxCoeff());
      if (s.candidate_violation) {
        max_candidate_violation = std::max(max_candidate_violation, *s.candidate_violation);
      }
      if (i + 1 < trace.steps.size() && trace.steps[i + 1].feasible) {
        const Vector v0 = s.v.head(d.m);
        worst_decrease = std::max(
            worst_decrease, trace.steps[i + 1].cost - s.cost + v0.dot(d.psi * v0));
      }
    }
    json rep = {{"x0", geometry::vector_to_json(sc.x0)},
                {"T", sc.T},
                {"policy", std::string(to_string(sc.policy.kind))},
                {"seed", sc.policy.seed},
                {"steps", trace.steps.size()},
                {"x_final", geometry::vector_to_json(trace.x_final)},
                {"x_final_norm", trace.x_final.norm()},
                {"max_constraint_violation", max_violation},
                {"max_cost_decrease_residual", worst_decrease},
                {"max_candidate_violation", max_candidate_violation}};
    rep["infeasible_at"] = trace.infeasible_at ? json(*trace.infeasible_at) : json(nullptr);
    if (!trace.steps.empty() && trace.steps.front().feasible) {
      rep["initial_cost"] = trace.steps.front().cost;
    }
    report_["simulate"] = rep;
    if (options_.write_artifacts) write_trace(trace, d);

    if (trace.infeasible_at) {
      const int t = *trace.infeasible_at;
      throw StageFailure{kExitInfeasible, t == 0 ? "online_qp:x0" : "online_qp:recursive",
                         "InfeasibleAt: online problem infeasible at t = " + std::to_string(t)};
    }
    if (!sc.snapshots.empty()) {
      const auto tubes = tube_snapshots(d, sc.x0, sc.snapshots);
      for (std::size_t i = 0; i < tubes.size(); ++i) {
        const int k = sc.snapshots[i];
        if (options_.write_artifacts) {
          write_json(out_dir_ / ("tube_" + std::to_string(k) + ".json"),
                     {{"k", k}, {"tube", geometry::to_json(tubes[i])}});
        }
      }
      report_["simulate"]["snapshots"] = sc.snapshots;
    }
  }

  void write_trace(const SimulationTrace& trace, const ControllerData& d) const {
    std::ostringstream os;
    os << 't';
    for (int i = 0; i < d.n; ++i) os << ",x" << i + 1;
    if (d.m == 1) {
      os << ",u";
    } else {
      for (int i = 0; i < d.m; ++i) os << ",u" << i + 1;
    }
    os << ",J";
    for (int k = 0; k < d.N; ++k) os << ",lambda" << k;
    os << ",feasible\n";
    const std::string nan = "nan";
    for (const SimulationStep& s : trace.steps) {
      os << s.t;
      for (int i = 0; i < d.n; ++i) os << ',' << format_double(s.x(i));
      for (int i = 0; i < d.m; ++i) os << ',' << (s.feasible ? format_double(s.u(i)) : nan);
      os << ',' << (s.feasible ? format_double(s.cost) : nan);
      for (int k = 0; k < d.N; ++k) os << ',' << (s.feasible ? format_double(s.lambda(k)) : nan);
      os << ',' << (s.feasible ? 1 : 0) << '\n';
    }
    write_text(out_dir_ / "trace.csv", os.str());
  }

  // ---- roa ---------------------------------------------------------------

  void stage_roa() {
    const RoaConfig& rc = *cfg_.roa;
    std::vector<std::string> names;
    if (loaded_) {
      names = {"loaded"};
    } else {
      names = rc.containers;
      if (std::find(names.begin(), names.end(), cfg_.container.use) == names.end()) {
        names.push_back(cfg_.container.use);
      }
    }
    json rep;
    rep["resolution"] = rc.grid.resolution;
    rep["refine"] = rc.grid.refine;
    rep["box"] = json::array();
    for (int i = 0; i < rc.grid.lo.size(); ++i) rep["box"].push_back({rc.grid.lo(i), rc.grid.hi(i)});
    rep["literature_reference"] = {{"method", "homothetic tube"},
                                   {"area", kHomotheticTubeRoaArea},
                                   {"reproduced", false}};
    for (const auto& name : names) {
      const ControllerData& d = loaded_ ? *loaded_ : controller_for(name);
      const auto t0 = std::chrono::steady_clock::now();
      const RoaResult r = roa_estimate(d, rc.grid, workers_);
      const auto t1 = std::chrono::steady_clock::now();
      rep["containers"][name] = {{"area", r.area},
                                 {"feasible_cells", r.feasible_cells},
                                 {"refined_cells", r.refined_cells},
                                 {"solves", r.solves},
                                 {"seconds", std::chrono::duration<double>(t1 - t0).count()}};
      if (options_.write_artifacts) {
        const std::string csv = roa_csv(r);
        write_text(out_dir_ / ("roa_" + name + ".csv"), csv);
        if (name == cfg_.container.use || loaded_) write_text(out_dir_ / "roa.csv", csv);
      }
    }
    rep["used"] = loaded_ ? "loaded" : cfg_.container.use;
    report_["roa"] = rep;
  }

  static std::string roa_csv(const RoaResult& r) {
    std::ostringstream os;
    const int n = r.cells.empty() ? 0 : static_cast<int>(r.cells.front().center.size());
    for (int i = 0; i < n; ++i) os << (i ? ",x" : "x") << i + 1;
    os << ",feasible\n";
    for (const RoaCell& c : r.cells) {
      for (int i = 0; i < n; ++i) os << (i ? "," : "") << format_double(c.center(i));
      os << ',' << (c.feasible ? 1 : 0) << '\n';
    }
    return os.str();
  }

  const RunConfig& cfg_;
  PipelineOptions options_;
  fs::path out_dir_;
  int workers_ = 1;
  json report_ = json::object();
  std::optional<ContainerChain> chain_;
  std::map<std::string, ContainerState> states_;
  std::map<std::string, GammaBounds> bounds_;
  std::optional<ControllerData> loaded_;
  const ControllerData* used_ = nullptr;
};

}  // namespace

PipelineResult run_pipeline(const RunConfig& cfg, const PipelineOptions& options) {
  return Runner(cfg, options).run();
}

}  // namespace tube_rmpc::cli
