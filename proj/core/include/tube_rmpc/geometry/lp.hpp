#pragma once

#include <string_view>

#include "tube_rmpc/types.hpp"

namespace tube_rmpc::geometry {

enum class SolveStatus { kOptimal, kInfeasible, kUnbounded };

std::string_view to_string(SolveStatus status);

// min cᵀz  s.t.  Gz ≤ g,  Az = b,  z free.
// Empty G or A (zero rows) is allowed; their column count must still match
// the cost dimension when they have rows.
struct LinearProgram {
  Vector cost;
  Matrix G;
  Vector g;
  Matrix A;
  Vector b;
};

struct LpResult {
  SolveStatus status = SolveStatus::kInfeasible;
  Vector z;
  double objective = 0.0;

  bool optimal() const { return status == SolveStatus::kOptimal; }
};

// Contract shared by every LP backend. A returned minimizer satisfies all
// constraints within the backend's feasibility tolerance. Implementations are
// stateless so one instance may be reused for any number of solves, but each
// worker thread is expected to own its instance.
class LpSolver {
 public:
  virtual ~LpSolver() = default;
  virtual LpResult solve(const LinearProgram& lp) const = 0;
};

// Dense two-phase tableau simplex. Meant for the small programs that arise in
// low-dimensional set algebra (a handful of variables, up to a few hundred
// rows). Dantzig pricing, falling back to Bland's rule after a run of
// degenerate pivots.
class SimplexLpSolver final : public LpSolver {
 public:
  struct Options {
    double pivot_tol = 1e-11;
    double optimality_tol = 1e-10;
    double feasibility_tol = 1e-9;
    int degenerate_switch = 50;
    int max_iterations = 100000;
  };

  SimplexLpSolver() = default;
  explicit SimplexLpSolver(Options options) : options_(options) {}

  LpResult solve(const LinearProgram& lp) const override;

 private:
  Options options_{};
};

// The process-wide default backend.
const LpSolver& default_lp_solver();

}  // namespace tube_rmpc::geometry
