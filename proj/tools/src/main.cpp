#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tube_rmpc/cli/pipeline.hpp"
#include "tube_rmpc/error.hpp"

namespace {

using tube_rmpc::cli::Stage;

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> controller;
  std::string stage = "pipeline";
};

CLI::App* add_stage_command(CLI::App& app, const std::string& name,
                            const std::string& description, CommonArgs& args,
                            bool takes_controller) {
  CLI::App* sub = app.add_subcommand(name, description);
  sub->add_option("config", args.config, "run configuration (JSON)")->required()->check(
      CLI::ExistingFile);
  sub->add_option("--seed", args.seed, "override sim.seed");
  sub->add_option("--out", args.out, "override output_dir");
  if (takes_controller) {
    sub->add_option("--controller", args.controller,
                    "controller.json written by `prepare`; skips the offline stages")
        ->check(CLI::ExistingFile);
  }
  return sub;
}

void print_summary(const nlohmann::json& report) {
  if (report.contains("stages_run")) {
    std::cout << "stages:";
    for (const auto& s : report["stages_run"]) std::cout << ' ' << s.get<std::string>();
    std::cout << '\n';
  }
  if (report.contains("container")) {
    for (const auto& [name, vol] : report["container"]["volumes"].items()) {
      std::cout << name << ": volume " << vol.get<double>() << ", md image area "
                << report["container"]["md_image_areas"][name].get<double>() << '\n';
    }
  }
  if (report.contains("terminal")) {
    const auto& t = report["terminal"];
    std::cout << "gamma_inf " << t["gamma_inf"].get<double>() << ", lambda_inf "
              << t["lambda_inf"].get<double>() << ", terminal facets " << t["facets"] << '\n';
  }
  if (report.contains("controller")) {
    const auto& c = report["controller"];
    std::cout << "QP: " << c["variables"] << " variables, " << c["inequalities"]
              << " inequalities\n";
  }
  if (report.contains("simulate")) {
    const auto& s = report["simulate"];
    std::cout << "simulate: " << s["steps"] << " steps, |x_T| = "
              << s["x_final_norm"].get<double>() << '\n';
  }
  if (report.contains("roa") && report["roa"].contains("containers")) {
    for (const auto& [name, r] : report["roa"]["containers"].items()) {
      std::cout << "roa " << name << ": area " << r["area"].get<double>() << '\n';
    }
  }
  if (report.contains("error")) {
    const auto& e = report["error"];
    std::cerr << "error in " << e["stage"].get<std::string>() << " ["
              << e["constraint"].get<std::string>() << "]: " << e["message"].get<std::string>()
              << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust tube MPC with concentric containers"};
  app.require_subcommand(1);
  CommonArgs args;

  add_stage_command(app, "validate", "check the system assumptions", args, false);
  add_stage_command(app, "container-opt", "build and optimize the container chain", args, false);
  add_stage_command(app, "terminal", "compute the output admissible terminal set", args, false);
  add_stage_command(app, "prepare", "precompute and save the controller data", args, false);
  add_stage_command(app, "simulate", "closed-loop simulation", args, true);
  add_stage_command(app, "roa", "region of attraction grid estimate", args, true);
  CLI::App* pipeline =
      add_stage_command(app, "pipeline", "run every configured stage", args, true);
  pipeline->add_option("--stage", args.stage, "stop after this stage")
      ->check(CLI::IsMember({"validate", "container-opt", "terminal", "prepare", "simulate",
                             "roa", "pipeline"}));

  CLI11_PARSE(app, argc, argv);

  try {
    tube_rmpc::cli::RunConfig cfg = tube_rmpc::cli::load_config(args.config);
    if (args.out) cfg.output_dir = *args.out;
    if (args.seed && cfg.sim) cfg.sim->policy.seed = *args.seed;

    tube_rmpc::cli::PipelineOptions options;
    const std::string command = app.get_subcommands().front()->get_name();
    options.stage = tube_rmpc::cli::stage_from_string(command == "pipeline" ? args.stage
                                                                            : command);
    if (args.controller) options.controller_file = *args.controller;

    const auto result = tube_rmpc::cli::run_pipeline(cfg, options);
    print_summary(result.report);
    std::cout << "report: " << (cfg.output_dir / "report.json").string() << '\n';
    return result.exit_code;
  } catch (const tube_rmpc::cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
  } catch (const tube_rmpc::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
  }
  return tube_rmpc::cli::kExitError;
}
