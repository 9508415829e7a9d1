#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "tube_rmpc/container.hpp"
#include "tube_rmpc/controller.hpp"
#include "tube_rmpc/model.hpp"
#include "tube_rmpc/terminal.hpp"

namespace fixture {

std::filesystem::path data_dir();
nlohmann::json reference_config();

// The bundled two-state example, its container chain (grid 5×5, N_i = 2,
// Z rows kept), terminal sets at γ0 = 10 and N = 10 controllers. Built once
// per process and shared read-only.
struct Reference {
  tube_rmpc::UncertainSystem sys;
  tube_rmpc::ContainerChain chain;
  tube_rmpc::TerminalSet terminal0;
  tube_rmpc::TerminalSet terminal2;
  tube_rmpc::ControllerData controller0;
  tube_rmpc::ControllerData controller2;
  tube_rmpc::Vector x0;
  tube_rmpc::Vector theta;
};
const Reference& reference();

// x⁺ = a x + b u on |x| ≤ x_max, |u| ≤ u_max with u = k x, no disturbance and
// no model uncertainty.
tube_rmpc::UncertainSystem scalar_nominal(double a, double b, double k, double x_max,
                                          double u_max);

}  // namespace fixture
