#include "tube_rmpc/geometry/polytope.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "tube_rmpc/error.hpp"
#include "tube_rmpc/geometry/enumeration.hpp"

namespace tube_rmpc::geometry {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_same_dim(int a, int b, const char* what) {
  if (a != b) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(what) + ": dimensions " + std::to_string(a) +
                    " and " + std::to_string(b));
  }
}

// An explicitly empty set in the given dimension.
HPolytope empty_set(int dim) {
  Matrix H = Matrix::Zero(2, dim);
  H(0, 0) = 1.0;
  H(1, 0) = -1.0;
  return HPolytope(H, Vector::Constant(2, -1.0));
}

LinearProgram support_lp(const HPolytope& P, const Vector& d) {
  LinearProgram lp;
  lp.cost = -d;
  lp.G = P.H();
  lp.g = P.h();
  lp.A = Matrix(0, P.dim());
  lp.b = Vector(0);
  return lp;
}

}  // namespace

HPolytope::HPolytope(Matrix H, Vector h) : H_(std::move(H)), h_(std::move(h)) {
  if (H_.rows() != h_.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "H and h row counts differ");
  }
  for (int i = 0; i < H_.rows(); ++i) {
    const double s = H_.row(i).norm();
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "facet row " + std::to_string(i) + " is zero or not finite");
    }
    H_.row(i) /= s;
    h_(i) /= s;
  }
}

HPolytope HPolytope::box(const Vector& lo, const Vector& hi) {
  require_same_dim(static_cast<int>(lo.size()), static_cast<int>(hi.size()),
                   "box bounds");
  const int n = static_cast<int>(lo.size());
  Matrix H(2 * n, n);
  H << Matrix::Identity(n, n), -Matrix::Identity(n, n);
  Vector h(2 * n);
  h << hi, -lo;
  return HPolytope(H, h);
}

HPolytope HPolytope::box(int dim, double half_width) {
  return box(Vector::Constant(dim, -half_width), Vector::Constant(dim, half_width));
}

bool HPolytope::contains(const Vector& x, double tol) const {
  require_same_dim(dim(), static_cast<int>(x.size()), "point membership");
  return num_facets() == 0 || (H_ * x - h_).maxCoeff() <= tol;
}

bool HPolytope::is_empty(const LpSolver& lp) const {
  if (num_facets() == 0) return false;
  LinearProgram prog = support_lp(*this, Vector::Zero(dim()));
  return lp.solve(prog).status == SolveStatus::kInfeasible;
}

bool HPolytope::is_bounded(const LpSolver& lp) const {
  for (int i = 0; i < dim(); ++i) {
    for (double s : {1.0, -1.0}) {
      const LpResult r = lp.solve(support_lp(*this, s * Vector::Unit(dim(), i)));
      if (r.status == SolveStatus::kUnbounded) return false;
      if (r.status == SolveStatus::kInfeasible) return true;
    }
  }
  return true;
}

HPolytope HPolytope::scaled(double alpha) const {
  if (alpha < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "negative scaling factor");
  }
  HPolytope out = *this;
  out.h_ *= alpha;
  return out;
}

VPolytope::VPolytope(Matrix vertices) : V_(std::move(vertices)) {
  if (V_.cols() == 0 || V_.rows() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "vertex polytope needs a point");
  }
  if (!V_.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "vertex coordinates not finite");
  }
}

VPolytope VPolytope::point(const Vector& x) { return VPolytope(Matrix(x)); }

VPolytope VPolytope::box(const Vector& lo, const Vector& hi) {
  require_same_dim(static_cast<int>(lo.size()), static_cast<int>(hi.size()),
                   "box bounds");
  const int n = static_cast<int>(lo.size());
  Matrix V(n, 1 << n);
  for (int k = 0; k < (1 << n); ++k) {
    for (int i = 0; i < n; ++i) V(i, k) = (k >> i) & 1 ? hi(i) : lo(i);
  }
  return VPolytope(V);
}

VPolytope VPolytope::canonical(const Tolerances& tol) const {
  return VPolytope(hull_vertices(V_, tol.vertex_dedup));
}

VPolytope VPolytope::scaled(double alpha) const { return VPolytope(alpha * V_); }

VPolytope VPolytope::translated(const Vector& x) const {
  require_same_dim(dim(), static_cast<int>(x.size()), "translation");
  return VPolytope(V_.colwise() + x);
}

double support(const VPolytope& P, const Vector& d) {
  require_same_dim(P.dim(), static_cast<int>(d.size()), "support direction");
  return (d.transpose() * P.vertices()).maxCoeff();
}

double support(const HPolytope& P, const Vector& d, const LpSolver& lp) {
  require_same_dim(P.dim(), static_cast<int>(d.size()), "support direction");
  const LpResult r = lp.solve(support_lp(P, d));
  if (r.status == SolveStatus::kInfeasible) {
    throw Error(ErrorCode::kInfeasible, "support of an empty set");
  }
  if (r.status == SolveStatus::kUnbounded) {
    throw Error(ErrorCode::kUnbounded, "support unbounded in this direction");
  }
  return -r.objective;
}

Vector support_rows(const Matrix& M, const VPolytope& P) {
  require_same_dim(static_cast<int>(M.cols()), P.dim(), "support rows");
  if (M.rows() == 0) return Vector(0);
  return (M * P.vertices()).rowwise().maxCoeff();
}

VPolytope minkowski_sum(const VPolytope& A, const VPolytope& B,
                        const Tolerances& tol) {
  require_same_dim(A.dim(), B.dim(), "Minkowski sum");
  Matrix S(A.dim(), A.num_vertices() * B.num_vertices());
  int k = 0;
  for (int i = 0; i < A.num_vertices(); ++i) {
    for (int j = 0; j < B.num_vertices(); ++j) {
      S.col(k++) = A.vertices().col(i) + B.vertices().col(j);
    }
  }
  return VPolytope(S).canonical(tol);
}

HPolytope pontryagin_diff(const HPolytope& A, const VPolytope& B) {
  require_same_dim(A.dim(), B.dim(), "Pontryagin difference");
  return HPolytope(A.H(), A.h() - support_rows(A.H(), B));
}

HPolytope pontryagin_diff(const HPolytope& A, const HPolytope& B) {
  return pontryagin_diff(A, vertex_enum(B));
}

HPolytope scaled_diff(const HPolytope& A, double lambda1, const VPolytope& B,
                      double lambda2) {
  if (lambda1 < 0.0 || lambda2 < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "negative scale in scaled difference");
  }
  require_same_dim(A.dim(), B.dim(), "scaled difference");
  return HPolytope(A.H(), lambda1 * A.h() - lambda2 * support_rows(A.H(), B));
}

VPolytope linear_map(const Matrix& M, const VPolytope& P, const Tolerances& tol) {
  require_same_dim(static_cast<int>(M.cols()), P.dim(), "linear map");
  return VPolytope(M * P.vertices()).canonical(tol);
}

HPolytope preimage(const HPolytope& P, const Matrix& M) {
  require_same_dim(P.dim(), static_cast<int>(M.rows()), "preimage");
  const Matrix HM = P.H() * M;
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  std::vector<int> keep;
  for (int i = 0; i < HM.rows(); ++i) {
    if (HM.row(i).norm() > 1e-14 * scale) {
      keep.push_back(i);
    } else if (P.h()(i) < 0.0) {
      return empty_set(static_cast<int>(M.cols()));
    }
  }
  Matrix H(keep.size(), M.cols());
  Vector h(keep.size());
  for (std::size_t k = 0; k < keep.size(); ++k) {
    H.row(k) = HM.row(keep[k]);
    h(k) = P.h()(keep[k]);
  }
  return HPolytope(H, h);
}

HPolytope intersect(const HPolytope& A, const HPolytope& B,
                    const Tolerances& tol, const LpSolver& lp) {
  require_same_dim(A.dim(), B.dim(), "intersection");
  Matrix H(A.num_facets() + B.num_facets(), A.dim());
  H << A.H(), B.H();
  Vector h(H.rows());
  h << A.h(), B.h();
  return remove_redundancy(HPolytope(H, h), tol, lp);
}

HPolytope remove_redundancy(const HPolytope& P, const Tolerances& tol,
                            const LpSolver& lp) {
  const int n = P.dim();
  // Parallel rows: keep the tightest.
  std::vector<int> rows;
  for (int i = 0; i < P.num_facets(); ++i) {
    bool merged = false;
    for (int& r : rows) {
      if ((P.H().row(i) - P.H().row(r)).lpNorm<Eigen::Infinity>() <= 1e-12) {
        if (P.h()(i) < P.h()(r)) r = i;
        merged = true;
        break;
      }
    }
    if (!merged) rows.push_back(i);
  }
  if (HPolytope(P.H()(rows, Eigen::all), P.h()(rows)).is_empty(lp)) return P;

  // A row is redundant when, with its own offset relaxed by one, its normal
  // still cannot exceed the original offset.
  std::size_t k = 0;
  while (k < rows.size()) {
    const int r = rows[k];
    LinearProgram prog;
    prog.cost = -P.H().row(r).transpose();
    prog.G.resize(static_cast<Eigen::Index>(rows.size()), n);
    prog.g.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t j = 0; j < rows.size(); ++j) {
      prog.G.row(j) = P.H().row(rows[j]);
      prog.g(j) = P.h()(rows[j]) + (j == k ? 1.0 : 0.0);
    }
    prog.A = Matrix(0, n);
    prog.b = Vector(0);
    const LpResult res = lp.solve(prog);
    if (res.optimal() && -res.objective <= P.h()(r) + tol.feas_tol) {
      rows.erase(rows.begin() + static_cast<std::ptrdiff_t>(k));
    } else {
      ++k;
    }
  }
  return HPolytope(P.H()(rows, Eigen::all), P.h()(rows));
}

bool contains_set(const HPolytope& A, const VPolytope& B, const Tolerances& tol) {
  require_same_dim(A.dim(), B.dim(), "containment");
  if (A.num_facets() == 0) return true;
  return (support_rows(A.H(), B) - A.h()).maxCoeff() <= tol.feas_tol;
}

bool contains_set(const HPolytope& A, const HPolytope& B, const Tolerances& tol,
                  const LpSolver& lp) {
  require_same_dim(A.dim(), B.dim(), "containment");
  for (int i = 0; i < A.num_facets(); ++i) {
    const LpResult r = lp.solve(support_lp(B, A.H().row(i).transpose()));
    if (r.status == SolveStatus::kInfeasible) return true;  // B empty
    if (r.status == SolveStatus::kUnbounded) return false;
    if (-r.objective > A.h()(i) + tol.feas_tol) return false;
  }
  return true;
}

double min_scale_containment(const VPolytope& S, const HPolytope& X) {
  require_same_dim(S.dim(), X.dim(), "scale containment");
  if (!X.origin_interior()) {
    throw Error(ErrorCode::kInvalidArgument,
                "reference set must contain the origin in its interior");
  }
  const Vector ratio = support_rows(X.H(), S).cwiseQuotient(X.h());
  return std::max(0.0, ratio.maxCoeff());
}

double min_scale_containment(const HPolytope& S, const HPolytope& X,
                             const LpSolver& lp) {
  require_same_dim(S.dim(), X.dim(), "scale containment");
  if (!X.origin_interior()) {
    throw Error(ErrorCode::kInvalidArgument,
                "reference set must contain the origin in its interior");
  }
  double gamma = 0.0;
  for (int i = 0; i < X.num_facets(); ++i) {
    const LpResult r = lp.solve(support_lp(S, X.H().row(i).transpose()));
    if (r.status == SolveStatus::kInfeasible) return 0.0;
    if (r.status == SolveStatus::kUnbounded) return kInf;
    gamma = std::max(gamma, -r.objective / X.h()(i));
  }
  return gamma;
}

bool set_equal(const HPolytope& A, const HPolytope& B, const Tolerances& tol) {
  return contains_set(A, B, tol) && contains_set(B, A, tol);
}

bool set_equal(const VPolytope& A, const VPolytope& B, const Tolerances& tol) {
  require_same_dim(A.dim(), B.dim(), "set equality");
  // Compare support values along the facet normals of both hulls; in the
  // degenerate case fall back to mutual vertex membership via the hull of
  // the union.
  try {
    const HPolytope HA = facet_enum(A);
    const HPolytope HB = facet_enum(B);
    return contains_set(HA, B, tol) && contains_set(HB, A, tol);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDegenerate) throw;
  }
  Matrix both(A.dim(), A.num_vertices() + B.num_vertices());
  both << A.vertices(), B.vertices();
  const VPolytope U = VPolytope(both).canonical(tol);
  const VPolytope CA = A.canonical(tol);
  const VPolytope CB = B.canonical(tol);
  auto same = [&](const VPolytope& X) {
    if (X.num_vertices() != U.num_vertices()) return false;
    for (int i = 0; i < U.num_vertices(); ++i) {
      const double dist = (X.vertices().colwise() - U.vertices().col(i))
                              .colwise()
                              .lpNorm<Eigen::Infinity>()
                              .minCoeff();
      if (dist > std::sqrt(tol.feas_tol)) return false;
    }
    return true;
  };
  return same(CA) && same(CB);
}

VPolytope vertex_enum(const HPolytope& P) {
  const Matrix V = enumerate_vertices(P.H(), P.h());
  if (V.cols() == 0) throw Error(ErrorCode::kInfeasible, "polytope is empty");
  return VPolytope(V);
}

HPolytope facet_enum(const VPolytope& P) {
  const FacetEnumeration f = enumerate_facets(P.vertices());
  return HPolytope(f.H, f.h);
}

double volume(const VPolytope& P) {
  const int d = P.dim();
  const VPolytope C = P.canonical();
  if (d == 1) return C.vertices().maxCoeff() - C.vertices().minCoeff();
  if (d == 2) {
    const Matrix& V = C.vertices();
    if (V.cols() < 3) return 0.0;
    double area = 0.0;
    for (int i = 0; i < V.cols(); ++i) {
      const int j = (i + 1) % static_cast<int>(V.cols());
      area += V(0, i) * V(1, j) - V(0, j) * V(1, i);
    }
    return 0.5 * std::abs(area);
  }
  if (d != 3) {
    throw Error(ErrorCode::kInvalidArgument, "volume supported in 1 to 3 dimensions");
  }
  FacetEnumeration f;
  try {
    f = enumerate_facets(C.vertices());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kDegenerate) return 0.0;
    throw;
  }
  const Matrix& V = C.vertices();
  const Eigen::Vector3d c = V.rowwise().mean();
  const double s = (V.colwise() - Vector(c)).colwise().norm().maxCoeff();
  double vol = 0.0;
  for (int r = 0; r < f.H.rows(); ++r) {
    const Eigen::Vector3d nrm = f.H.row(r).transpose();
    std::vector<Eigen::Vector3d> face;
    for (int j = 0; j < V.cols(); ++j) {
      if (std::abs(nrm.dot(V.col(j)) - f.h(r)) <= 1e-7 * s) face.push_back(V.col(j));
    }
    if (face.size() < 3) continue;
    Eigen::Vector3d fc = Eigen::Vector3d::Zero();
    for (const auto& p : face) fc += p;
    fc /= static_cast<double>(face.size());
    const Eigen::Vector3d e1 = (face[0] - fc).normalized();
    const Eigen::Vector3d e2 = nrm.cross(e1);
    std::sort(face.begin(), face.end(), [&](const auto& a, const auto& b) {
      return std::atan2((a - fc).dot(e2), (a - fc).dot(e1)) <
             std::atan2((b - fc).dot(e2), (b - fc).dot(e1));
    });
    double area = 0.0;
    for (std::size_t i = 0; i < face.size(); ++i) {
      const auto& a = face[i];
      const auto& b = face[(i + 1) % face.size()];
      area += nrm.dot((a - fc).cross(b - fc));
    }
    vol += 0.5 * area * (f.h(r) - nrm.dot(c)) / 3.0;
  }
  return vol;
}

double volume(const HPolytope& P) { return volume(vertex_enum(P)); }

}  // namespace tube_rmpc::geometry
