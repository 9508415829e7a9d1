#pragma once

#include <vector>

#include "tube_rmpc/geometry/lp.hpp"

namespace tube_rmpc::geometry {

// min ½zᵀPz + cᵀz  s.t.  Gz ≤ g,  Az = b.  P symmetric positive semidefinite.
struct QuadraticProgram {
  Matrix P;
  Vector c;
  Matrix G;
  Vector g;
  Matrix A;
  Vector b;
};

struct QpResult {
  SolveStatus status = SolveStatus::kInfeasible;
  Vector z;
  // ½zᵀPz + cᵀz evaluated with the caller's P (no regularization).
  double objective = 0.0;
  // Indices into the rows of G that are in the final active set.
  std::vector<int> active_set;
  int iterations = 0;

  bool optimal() const { return status == SolveStatus::kOptimal; }
};

class QpSolver {
 public:
  virtual ~QpSolver() = default;
  virtual QpResult solve(const QuadraticProgram& qp) const = 0;
};

// Goldfarb–Idnani dual active-set method. The dual method needs a strictly
// convex objective; when P is only semidefinite, `regularization` times
// max(1, max|P_ii|) is added to the diagonal before factorizing. Infeasibility
// is detected by the dual step becoming unbounded. Throws kSolverFailure when
// the iteration limit is hit or rounding leaves the returned point infeasible.
class DualActiveSetQpSolver final : public QpSolver {
 public:
  struct Options {
    double regularization = 1e-8;
    // Absolute violation accepted on a row scaled to unit norm.
    double feasibility_tol = 1e-9;
    int max_iterations = 10000;
  };

  DualActiveSetQpSolver() = default;
  explicit DualActiveSetQpSolver(Options options) : options_(options) {}

  QpResult solve(const QuadraticProgram& qp) const override;

 private:
  Options options_{};
};

// The process-wide default backend.
const QpSolver& default_qp_solver();

}  // namespace tube_rmpc::geometry
