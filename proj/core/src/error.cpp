#include "tube_rmpc/error.hpp"

namespace tube_rmpc {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kUnbounded: return "Unbounded";
    case ErrorCode::kInfeasible: return "Infeasible";
    case ErrorCode::kDegenerate: return "Degenerate";
    case ErrorCode::kSolverFailure: return "SolverFailure";
    case ErrorCode::kAssumptionViolated: return "AssumptionViolated";
    case ErrorCode::kNoAdmissibleGamma: return "NoAdmissibleGamma";
    case ErrorCode::kEmptyTerminalSet: return "EmptyTerminalSet";
    case ErrorCode::kIterationCap: return "IterationCap";
    case ErrorCode::kNoFiniteLambda: return "NoFiniteLambda";
    case ErrorCode::kInfeasibleAt: return "InfeasibleAt";
  }
  return "Unknown";
}

}  // namespace tube_rmpc
