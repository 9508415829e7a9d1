#pragma once

#include "tube_rmpc/container.hpp"
#include "tube_rmpc/controller.hpp"
#include "tube_rmpc/terminal.hpp"

namespace bench {

// The bundled two-state example with its optimized container, terminal set
// and horizon-10 controller, built once.
struct Setup {
  tube_rmpc::UncertainSystem sys;
  tube_rmpc::ContainerChain chain;
  tube_rmpc::TerminalSet terminal;
  tube_rmpc::ControllerData controller;
};
const Setup& setup();

}  // namespace bench
