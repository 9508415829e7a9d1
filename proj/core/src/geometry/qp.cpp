#include "tube_rmpc/geometry/qp.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "tube_rmpc/error.hpp"

namespace tube_rmpc::geometry {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kBreakdownFactor = 100.0;

// Working data of the Goldfarb–Idnani iteration. Constraints are stored as
// columns nᵢ with the convention nᵢᵀz + bᵢ ≥ 0.
struct DualActiveSet {
  int n = 0;
  Matrix J;  // L⁻ᵀ with orthogonal updates applied
  Matrix R;  // upper triangular factor of the active constraints
  double R_norm = 1.0;
  int iq = 0;

  bool add_constraint(Vector& d) {
    for (int j = n - 1; j >= iq + 1; --j) {
      double cc = d(j - 1);
      double ss = d(j);
      const double h = std::hypot(cc, ss);
      if (std::abs(h) < kEps) continue;
      d(j) = 0.0;
      ss /= h;
      cc /= h;
      if (cc < 0.0) {
        cc = -cc;
        ss = -ss;
        d(j - 1) = -h;
      } else {
        d(j - 1) = h;
      }
      const double xny = ss / (1.0 + cc);
      for (int k = 0; k < n; ++k) {
        const double t1 = J(k, j - 1);
        const double t2 = J(k, j);
        J(k, j - 1) = t1 * cc + t2 * ss;
        J(k, j) = xny * (t1 + J(k, j - 1)) - t2;
      }
    }
    ++iq;
    for (int i = 0; i < iq; ++i) R(i, iq - 1) = d(i);
    if (std::abs(d(iq - 1)) <= kEps * R_norm) return false;
    R_norm = std::max(R_norm, std::abs(d(iq - 1)));
    return true;
  }

  void delete_constraint(std::vector<int>& A, Vector& u, int p, int l) {
    int qq = -1;
    for (int i = p; i < iq; ++i) {
      if (A[i] == l) {
        qq = i;
        break;
      }
    }
    if (qq < 0) return;
    for (int i = qq; i < iq - 1; ++i) {
      A[i] = A[i + 1];
      u(i) = u(i + 1);
      R.col(i) = R.col(i + 1);
    }
    A[iq - 1] = A[iq];
    u(iq - 1) = u(iq);
    A[iq] = 0;
    u(iq) = 0.0;
    for (int j = 0; j < iq; ++j) R(j, iq - 1) = 0.0;
    --iq;
    if (iq == 0) return;
    for (int j = qq; j < iq; ++j) {
      double cc = R(j, j);
      double ss = R(j + 1, j);
      const double h = std::hypot(cc, ss);
      if (std::abs(h) < kEps) continue;
      cc /= h;
      ss /= h;
      R(j + 1, j) = 0.0;
      if (cc < 0.0) {
        R(j, j) = -h;
        cc = -cc;
        ss = -ss;
      } else {
        R(j, j) = h;
      }
      const double xny = ss / (1.0 + cc);
      for (int k = j + 1; k < iq; ++k) {
        const double t1 = R(j, k);
        const double t2 = R(j + 1, k);
        R(j, k) = t1 * cc + t2 * ss;
        R(j + 1, k) = xny * (t1 + R(j, k)) - t2;
      }
      for (int k = 0; k < n; ++k) {
        const double t1 = J(k, j);
        const double t2 = J(k, j + 1);
        J(k, j) = t1 * cc + t2 * ss;
        J(k, j + 1) = xny * (J(k, j) + t1) - t2;
      }
    }
  }

  // z = J[:, iq:] d[iq:],  r = R[:iq,:iq]⁻¹ d[:iq]
  void step_direction(const Vector& d, Vector& z, Vector& r) const {
    z = J.rightCols(n - iq) * d.tail(n - iq);
    for (int i = iq - 1; i >= 0; --i) {
      double sum = 0.0;
      for (int j = i + 1; j < iq; ++j) sum += R(i, j) * r(j);
      r(i) = (d(i) - sum) / R(i, i);
    }
  }
};

}  // namespace

QpResult DualActiveSetQpSolver::solve(const QuadraticProgram& qp) const {
  const int n = static_cast<int>(qp.c.size());
  const int mi = static_cast<int>(qp.G.rows());
  const int me = static_cast<int>(qp.A.rows());
  if (qp.P.rows() != n || qp.P.cols() != n || qp.g.size() != mi ||
      (mi > 0 && qp.G.cols() != n) || qp.b.size() != me ||
      (me > 0 && qp.A.cols() != n)) {
    throw Error(ErrorCode::kDimensionMismatch, "quadratic program shapes");
  }

  QpResult result;
  result.z = Vector::Zero(n);

  Matrix H = 0.5 * (qp.P + qp.P.transpose());
  const double shift =
      options_.regularization * std::max(1.0, H.diagonal().cwiseAbs().maxCoeff());
  Eigen::LLT<Matrix> llt(H);
  if (llt.info() != Eigen::Success ||
      llt.matrixL().toDenseMatrix().diagonal().array().square().minCoeff() < shift) {
    H.diagonal().array() += shift;
    llt.compute(H);
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorCode::kInvalidArgument,
                  "QP Hessian is not positive semidefinite");
    }
  }

  // Rows scaled to unit norm: nᵢ = −Gᵢ/‖Gᵢ‖, bᵢ = gᵢ/‖Gᵢ‖.
  Matrix CI(n, mi);
  Vector ci0(mi);
  for (int i = 0; i < mi; ++i) {
    const double s = qp.G.row(i).norm();
    if (s <= 0.0) {
      if (qp.g(i) < -options_.feasibility_tol) return result;
      CI.col(i).setZero();
      ci0(i) = 1.0;
      continue;
    }
    CI.col(i) = -qp.G.row(i).transpose() / s;
    ci0(i) = qp.g(i) / s;
  }
  Matrix CE(n, me);
  Vector ce0(me);
  for (int i = 0; i < me; ++i) {
    const double s = qp.A.row(i).norm();
    if (s <= 0.0) {
      if (std::abs(qp.b(i)) > options_.feasibility_tol) return result;
      CE.col(i).setZero();
      ce0(i) = 0.0;
      continue;
    }
    CE.col(i) = qp.A.row(i).transpose() / s;
    ce0(i) = -qp.b(i) / s;
  }

  DualActiveSet das;
  das.n = n;
  das.J = llt.matrixU().solve(Matrix::Identity(n, n));  // L⁻ᵀ
  das.R = Matrix::Zero(n, n);

  Vector x = -llt.solve(qp.c);
  const int m = mi + me;
  Vector u = Vector::Zero(m + 1);
  std::vector<int> A(m + 1, 0);
  Vector d(n), z(n), r = Vector::Zero(m + 1), np(n);

  for (int i = 0; i < me; ++i) {
    if (CE.col(i).squaredNorm() == 0.0) continue;
    np = CE.col(i);
    d = das.J.transpose() * np;
    das.step_direction(d, z, r);
    double t2 = 0.0;
    if (z.squaredNorm() > kEps) t2 = (-np.dot(x) - ce0(i)) / z.dot(np);
    x += t2 * z;
    u(das.iq) = t2;
    for (int k = 0; k < das.iq; ++k) u(k) -= t2 * r(k);
    A[das.iq] = -i - 1;
    if (!das.add_constraint(d)) {
      // Linearly dependent equalities; consistent only if already satisfied.
      --das.iq;
      if (std::abs(np.dot(x) + ce0(i)) > options_.feasibility_tol) return result;
    }
  }
  const int p = das.iq;

  std::vector<int> iai(mi);
  std::vector<char> iaexcl(mi, 1);
  Vector s(mi);
  std::vector<int> A_old(m + 1);
  Vector u_old(m + 1);
  Vector x_old(n);

  int iterations = 0;
  for (int i = 0; i < mi; ++i) iai[i] = i;

  auto finish = [&](SolveStatus status) {
    result.status = status;
    result.iterations = iterations;
    if (status != SolveStatus::kOptimal) return result;
    // Constraints skipped as numerically dependent must still hold.
    const double worst_in = mi > 0 ? (CI.transpose() * x + ci0).minCoeff() : 0.0;
    const double worst_eq =
        me > 0 ? (CE.transpose() * x + ce0).cwiseAbs().maxCoeff() : 0.0;
    if (worst_in < -kBreakdownFactor * options_.feasibility_tol ||
        worst_eq > kBreakdownFactor * options_.feasibility_tol) {
      throw Error(ErrorCode::kSolverFailure,
                  "active-set breakdown: returned point violates a constraint");
    }
    result.z = x;
    result.objective = 0.5 * x.dot(qp.P * x) + qp.c.dot(x);
    for (int k = p; k < das.iq; ++k) result.active_set.push_back(A[k]);
    return result;
  };

  const double tol = options_.feasibility_tol;
  while (true) {  // step 1
    if (++iterations > options_.max_iterations) {
      throw Error(ErrorCode::kSolverFailure, "QP iteration limit reached");
    }
    for (int k = p; k < das.iq; ++k) iai[A[k]] = -1;
    bool any_violation = false;
    for (int i = 0; i < mi; ++i) {
      iaexcl[i] = 1;
      s(i) = CI.col(i).dot(x) + ci0(i);
      if (s(i) < -tol) any_violation = true;
    }
    if (!any_violation) return finish(SolveStatus::kOptimal);
    for (int k = 0; k < das.iq; ++k) {
      u_old(k) = u(k);
      A_old[k] = A[k];
    }
    x_old = x;

  step2:
    int ip = -1;
    double ss = -tol;
    for (int i = 0; i < mi; ++i) {
      if (s(i) < ss && iai[i] != -1 && iaexcl[i]) {
        ss = s(i);
        ip = i;
      }
    }
    if (ip < 0) return finish(SolveStatus::kOptimal);
    np = CI.col(ip);
    u(das.iq) = 0.0;
    A[das.iq] = ip;

    while (true) {  // step 2a
      if (++iterations > options_.max_iterations) {
        throw Error(ErrorCode::kSolverFailure, "QP iteration limit reached");
      }
      d = das.J.transpose() * np;
      das.step_direction(d, z, r);

      int l = -1;
      double t1 = kInf;
      for (int k = p; k < das.iq; ++k) {
        if (r(k) > 0.0 && u(k) / r(k) < t1) {
          t1 = u(k) / r(k);
          l = A[k];
        }
      }
      double t2 = kInf;
      const double znp = z.dot(np);
      if (z.squaredNorm() > kEps && znp > 0.0) t2 = -s(ip) / znp;
      const double t = std::min(t1, t2);

      if (t >= kInf) return finish(SolveStatus::kInfeasible);

      if (t2 >= kInf) {  // dual step only
        for (int k = 0; k < das.iq; ++k) u(k) -= t * r(k);
        u(das.iq) += t;
        iai[l] = l;
        das.delete_constraint(A, u, p, l);
        continue;
      }

      x += t * z;
      for (int k = 0; k < das.iq; ++k) u(k) -= t * r(k);
      u(das.iq) += t;

      if (std::abs(t - t2) <= kEps * std::max(1.0, std::abs(t2))) {
        if (!das.add_constraint(d)) {
          iaexcl[ip] = 0;
          das.delete_constraint(A, u, p, ip);
          for (int i = 0; i < mi; ++i) iai[i] = i;
          for (int k = p; k < das.iq; ++k) {
            A[k] = A_old[k];
            u(k) = u_old(k);
            iai[A[k]] = -1;
          }
          x = x_old;
          goto step2;
        }
        iai[ip] = -1;
        break;  // back to step 1
      }

      iai[l] = l;
      das.delete_constraint(A, u, p, l);
      s(ip) = CI.col(ip).dot(x) + ci0(ip);
    }
  }
}

const QpSolver& default_qp_solver() {
  static const DualActiveSetQpSolver solver;
  return solver;
}

}  // namespace tube_rmpc::geometry
