#include "tube_rmpc/geometry/lp.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "tube_rmpc/error.hpp"

namespace tube_rmpc::geometry {

std::string_view to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kUnbounded: return "unbounded";
  }
  return "unknown";
}

namespace {

using Tableau =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Simplex {
  const SimplexLpSolver::Options& opt;
  Tableau T;
  std::vector<int> basis;
  int rows = 0;
  int cols = 0;  // number of variable columns; rhs is column `cols`
  int first_artificial = 0;

  void pivot(int r, int c) {
    T.row(r) /= T(r, c);
    for (int i = 0; i <= rows; ++i) {
      if (i == r) continue;
      const double f = T(i, c);
      if (f != 0.0) T.row(i) -= f * T.row(r);
    }
    basis[r] = c;
  }

  // Returns kOptimal or kUnbounded; throws on iteration cap.
  SolveStatus iterate(bool allow_artificial) {
    const int limit_col = allow_artificial ? cols : first_artificial;
    int degenerate_run = 0;
    for (int iter = 0; iter < opt.max_iterations; ++iter) {
      const bool bland = degenerate_run > opt.degenerate_switch;
      int enter = -1;
      double best = -opt.optimality_tol;
      for (int j = 0; j < limit_col; ++j) {
        const double d = T(rows, j);
        if (d < best) {
          enter = j;
          if (bland) break;
          best = d;
        }
      }
      if (enter < 0) return SolveStatus::kOptimal;

      int leave = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (int i = 0; i < rows; ++i) {
        const double a = T(i, enter);
        if (a <= opt.pivot_tol) continue;
        const double ratio = std::max(T(i, cols), 0.0) / a;
        if (leave < 0 || ratio < best_ratio - 1e-12) {
          leave = i;
          best_ratio = ratio;
        } else if (ratio <= best_ratio + 1e-12) {
          const bool better = bland ? basis[i] < basis[leave]
                                    : a > T(leave, enter);
          if (better) {
            leave = i;
            best_ratio = std::min(best_ratio, ratio);
          }
        }
      }
      if (leave < 0) return SolveStatus::kUnbounded;
      degenerate_run = best_ratio <= 1e-12 ? degenerate_run + 1 : 0;
      pivot(leave, enter);
    }
    throw Error(ErrorCode::kSolverFailure, "simplex iteration limit reached");
  }
};

}  // namespace

LpResult SimplexLpSolver::solve(const LinearProgram& lp) const {
  const int n = static_cast<int>(lp.cost.size());
  const int mi = static_cast<int>(lp.G.rows());
  const int me = static_cast<int>(lp.A.rows());
  if ((mi > 0 && lp.G.cols() != n) || lp.g.size() != mi ||
      (me > 0 && lp.A.cols() != n) || lp.b.size() != me) {
    throw Error(ErrorCode::kDimensionMismatch, "linear program shapes");
  }

  LpResult result;
  result.z = Vector::Zero(n);

  // Normalize rows; drop all-zero rows after checking them.
  std::vector<int> ineq_rows, eq_rows;
  std::vector<double> ineq_scale, eq_scale;
  for (int i = 0; i < mi; ++i) {
    const double s = mi > 0 && n > 0 ? lp.G.row(i).cwiseAbs().maxCoeff() : 0.0;
    if (s <= 0.0) {
      if (lp.g(i) < -options_.feasibility_tol) return result;
      continue;
    }
    ineq_rows.push_back(i);
    ineq_scale.push_back(1.0 / s);
  }
  for (int i = 0; i < me; ++i) {
    const double s = n > 0 ? lp.A.row(i).cwiseAbs().maxCoeff() : 0.0;
    if (s <= 0.0) {
      if (std::abs(lp.b(i)) > options_.feasibility_tol) return result;
      continue;
    }
    eq_rows.push_back(i);
    eq_scale.push_back(1.0 / s);
  }

  const int ni = static_cast<int>(ineq_rows.size());
  const int ne = static_cast<int>(eq_rows.size());
  int na = ne;
  for (int k = 0; k < ni; ++k) {
    if (lp.g(ineq_rows[k]) < 0.0) ++na;
  }

  Simplex sx{options_, {}, {}, ni + ne, 2 * n + ni + na, 2 * n + ni};
  sx.T = Tableau::Zero(sx.rows + 1, sx.cols + 1);
  sx.basis.assign(sx.rows, -1);

  int art = sx.first_artificial;
  for (int k = 0; k < ni; ++k) {
    const int i = ineq_rows[k];
    const double s = ineq_scale[k];
    const double sign = lp.g(i) < 0.0 ? -1.0 : 1.0;
    for (int j = 0; j < n; ++j) {
      sx.T(k, j) = sign * s * lp.G(i, j);
      sx.T(k, n + j) = -sign * s * lp.G(i, j);
    }
    sx.T(k, 2 * n + k) = sign;
    sx.T(k, sx.cols) = sign * s * lp.g(i);
    if (sign > 0) {
      sx.basis[k] = 2 * n + k;
    } else {
      sx.T(k, art) = 1.0;
      sx.basis[k] = art++;
    }
  }
  for (int k = 0; k < ne; ++k) {
    const int i = eq_rows[k];
    const int r = ni + k;
    const double s = eq_scale[k];
    const double sign = lp.b(i) < 0.0 ? -1.0 : 1.0;
    for (int j = 0; j < n; ++j) {
      sx.T(r, j) = sign * s * lp.A(i, j);
      sx.T(r, n + j) = -sign * s * lp.A(i, j);
    }
    sx.T(r, sx.cols) = sign * s * lp.b(i);
    sx.T(r, art) = 1.0;
    sx.basis[r] = art++;
  }

  // Phase 1: minimize the sum of artificials.
  if (na > 0) {
    for (int r = 0; r < sx.rows; ++r) {
      if (sx.basis[r] >= sx.first_artificial) sx.T.row(sx.rows) -= sx.T.row(r);
    }
    for (int j = sx.first_artificial; j < sx.cols; ++j) sx.T(sx.rows, j) = 0.0;
    sx.iterate(true);
    if (-sx.T(sx.rows, sx.cols) > options_.feasibility_tol) return result;
    // Drive zero-valued artificials out of the basis where possible.
    for (int r = 0; r < sx.rows; ++r) {
      if (sx.basis[r] < sx.first_artificial) continue;
      int best = -1;
      double best_abs = 1e-9;
      for (int j = 0; j < sx.first_artificial; ++j) {
        if (std::abs(sx.T(r, j)) > best_abs) {
          best = j;
          best_abs = std::abs(sx.T(r, j));
        }
      }
      if (best >= 0) sx.pivot(r, best);
    }
  }

  // Phase 2.
  sx.T.row(sx.rows).setZero();
  Eigen::RowVectorXd cost = Eigen::RowVectorXd::Zero(sx.cols + 1);
  cost.head(n) = lp.cost.transpose();
  cost.segment(n, n) = -lp.cost.transpose();
  sx.T.row(sx.rows) = cost;
  for (int r = 0; r < sx.rows; ++r) {
    const double cb = cost(sx.basis[r]);
    if (cb != 0.0) sx.T.row(sx.rows) -= cb * sx.T.row(r);
  }
  if (sx.iterate(false) == SolveStatus::kUnbounded) {
    result.status = SolveStatus::kUnbounded;
    return result;
  }

  Vector split = Vector::Zero(2 * n);
  for (int r = 0; r < sx.rows; ++r) {
    if (sx.basis[r] < 2 * n) split(sx.basis[r]) = sx.T(r, sx.cols);
  }
  result.z = split.head(n) - split.tail(n);
  result.objective = lp.cost.dot(result.z);
  result.status = SolveStatus::kOptimal;
  return result;
}

const LpSolver& default_lp_solver() {
  static const SimplexLpSolver solver;
  return solver;
}

}  // namespace tube_rmpc::geometry
