#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tube_rmpc {

enum class ErrorCode {
  kDimensionMismatch,
  kInvalidArgument,
  kUnbounded,
  kInfeasible,
  kDegenerate,
  kSolverFailure,
  kAssumptionViolated,
  kNoAdmissibleGamma,
  kEmptyTerminalSet,
  kIterationCap,
  kNoFiniteLambda,
  kInfeasibleAt,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries a machine-readable code so that
// the command line front end can map it onto an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace tube_rmpc
