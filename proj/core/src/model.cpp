#include "tube_rmpc/model.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "tube_rmpc/error.hpp"
#include "tube_rmpc/geometry/io.hpp"

namespace tube_rmpc {

using geometry::HPolytope;
using geometry::VPolytope;

Matrix UncertainSystem::Pi() const {
  Matrix P(n() + m(), n());
  P << Matrix::Identity(n(), n()), K;
  return P;
}

UncertainSystem make_system(Matrix A_n, Matrix B_n, Matrix K,
                            std::vector<Matrix> dP_vertices, HPolytope W,
                            HPolytope Z) {
  const auto n = A_n.rows();
  const auto m = B_n.cols();
  if (A_n.cols() != n || B_n.rows() != n || K.rows() != m || K.cols() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "A_n, B_n, K shapes");
  }
  if (W.dim() != n || Z.dim() != n + m) {
    throw Error(ErrorCode::kDimensionMismatch, "W must be in R^n and Z in R^(n+m)");
  }
  if (dP_vertices.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "uncertainty set has no vertices");
  }
  for (const Matrix& d : dP_vertices) {
    if (d.rows() != n || d.cols() != n + m) {
      throw Error(ErrorCode::kDimensionMismatch, "uncertainty vertex must be n x (n+m)");
    }
  }
  UncertainSystem sys;
  sys.A_n = std::move(A_n);
  sys.B_n = std::move(B_n);
  sys.K = std::move(K);
  sys.dP_vertices = std::move(dP_vertices);
  sys.W_vertices = geometry::vertex_enum(W);
  sys.W = std::move(W);
  sys.Z = std::move(Z);
  return sys;
}

std::vector<Matrix> vertices_from_basis(const std::vector<Matrix>& basis,
                                        double theta_box) {
  if (basis.empty()) throw Error(ErrorCode::kInvalidArgument, "empty basis");
  if (basis.size() > 16) throw Error(ErrorCode::kInvalidArgument, "basis too large");
  const int p = static_cast<int>(basis.size());
  std::vector<Matrix> out;
  for (int s = 0; s < (1 << p); ++s) {
    Matrix M = Matrix::Zero(basis[0].rows(), basis[0].cols());
    for (int i = 0; i < p; ++i) M += ((s >> i) & 1 ? theta_box : -theta_box) * basis[i];
    out.push_back(std::move(M));
  }
  return out;
}

UncertainSystem system_from_json(const nlohmann::json& j) {
  using geometry::matrix_from_json;
  auto read_matrix = [&](const char* key) {
    if (!j.contains(key)) {
      throw Error(ErrorCode::kInvalidArgument, std::string("missing field ") + key);
    }
    return matrix_from_json(j.at(key));
  };
  std::vector<Matrix> basis;
  std::vector<Matrix> vertices;
  double theta_box = 1.0;
  if (j.contains("dP_basis")) {
    for (const auto& b : j.at("dP_basis")) basis.push_back(matrix_from_json(b));
    theta_box = j.value("theta_box", 1.0);
    vertices = vertices_from_basis(basis, theta_box);
  } else if (j.contains("dP_vertices")) {
    for (const auto& v : j.at("dP_vertices")) vertices.push_back(matrix_from_json(v));
  } else {
    throw Error(ErrorCode::kInvalidArgument, "need dP_basis or dP_vertices");
  }
  UncertainSystem sys = make_system(
      read_matrix("A_n"), read_matrix("B_n"), read_matrix("K"), std::move(vertices),
      geometry::as_hpolytope(geometry::polytope_from_json(j.at("W"))),
      geometry::as_hpolytope(geometry::polytope_from_json(j.at("Z"))));
  sys.dP_basis = std::move(basis);
  sys.theta_box = theta_box;
  return sys;
}

nlohmann::json system_to_json(const UncertainSystem& sys) {
  using geometry::matrix_to_json;
  nlohmann::json j;
  j["A_n"] = matrix_to_json(sys.A_n);
  j["B_n"] = matrix_to_json(sys.B_n);
  j["K"] = matrix_to_json(sys.K);
  j["W"] = geometry::to_json(sys.W);
  j["Z"] = geometry::to_json(sys.Z);
  if (!sys.dP_basis.empty()) {
    j["dP_basis"] = nlohmann::json::array();
    for (const Matrix& b : sys.dP_basis) j["dP_basis"].push_back(matrix_to_json(b));
    j["theta_box"] = sys.theta_box;
  } else {
    j["dP_vertices"] = nlohmann::json::array();
    for (const Matrix& v : sys.dP_vertices) j["dP_vertices"].push_back(matrix_to_json(v));
  }
  return j;
}

bool ValidationReport::ok() const { return first_failure() == nullptr; }

const AssumptionCheck* ValidationReport::first_failure() const {
  for (const auto& c : checks) {
    if (!c.passed) return &c;
  }
  return nullptr;
}

double spectral_radius(const Matrix& A) {
  if (A.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(A, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

namespace {

// Largest t such that the origin is a convex combination of the points with
// every weight at least t. Positive iff the origin is in the relative interior.
double relative_interior_margin(const std::vector<Matrix>& points) {
  const int p = static_cast<int>(points.size());
  const int len = static_cast<int>(points[0].size());
  geometry::LinearProgram lp;
  lp.cost = Vector::Zero(p + 1);
  lp.cost(p) = -1.0;
  lp.G = Matrix::Zero(p + 1, p + 1);
  lp.g = Vector::Zero(p + 1);
  for (int i = 0; i < p; ++i) {
    lp.G(i, i) = -1.0;
    lp.G(i, p) = 1.0;
  }
  lp.G(p, p) = 1.0;  // t ≤ 1 keeps the program bounded
  lp.g(p) = 1.0;
  lp.A = Matrix::Zero(len + 1, p + 1);
  lp.b = Vector::Zero(len + 1);
  for (int i = 0; i < p; ++i) {
    lp.A.block(0, i, len, 1) = points[i].reshaped();
    lp.A(len, i) = 1.0;
  }
  lp.b(len) = 1.0;
  const auto res = geometry::default_lp_solver().solve(lp);
  return res.optimal() ? -res.objective : -1.0;
}

}  // namespace

ValidationReport validate(const UncertainSystem& sys) {
  ValidationReport report;
  report.checks.push_back(
      {"A1", sys.Z.origin_interior(),
       sys.Z.origin_interior() ? "origin interior to Z" : "origin not interior to Z"});
  report.checks.push_back(
      {"A2", sys.W.origin_interior(),
       sys.W.origin_interior() ? "origin interior to W" : "origin not interior to W"});

  const double margin = relative_interior_margin(sys.dP_vertices);
  report.checks.push_back({"A3", margin > 1e-12,
                           "relative-interior weight margin " + std::to_string(margin)});

  double worst = 0.0;
  for (const Matrix& dP : sys.dP_vertices) {
    const Matrix Acl = (sys.A_n + dP.leftCols(sys.n())) +
                       (sys.B_n + dP.rightCols(sys.m())) * sys.K;
    worst = std::max(worst, spectral_radius(Acl));
  }
  worst = std::max(worst, spectral_radius(sys.A_cl()));
  report.checks.push_back({"A4", worst < 1.0 - 1e-10,
                           "max vertex spectral radius " + std::to_string(worst)});
  report.warnings.push_back(
      "A4 is checked at the uncertainty vertices only; vertex-wise Schur "
      "stability does not imply robust stability for time-varying uncertainty");
  return report;
}

void require_valid(const UncertainSystem& sys) {
  const ValidationReport report = validate(sys);
  if (const auto* f = report.first_failure()) {
    throw Error(ErrorCode::kAssumptionViolated, f->id + ": " + f->detail);
  }
}

HPolytope state_slice(const HPolytope& P, const Matrix& K) {
  const auto n = K.cols();
  if (P.dim() != n + K.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "state slice of a set in the wrong space");
  }
  Matrix Pi(n + K.rows(), n);
  Pi << Matrix::Identity(n, n), K;
  return geometry::remove_redundancy(geometry::preimage(P, Pi));
}

Vector nominal_step(const UncertainSystem& sys, const Vector& x_bar, const Vector& v) {
  return sys.A_n * x_bar + sys.B_n * (sys.K * x_bar + v);
}

Matrix combine_basis(const std::vector<Matrix>& basis, const Vector& theta) {
  if (static_cast<int>(basis.size()) != theta.size() || basis.empty()) {
    throw Error(ErrorCode::kDimensionMismatch, "theta length must match the basis");
  }
  Matrix M = Matrix::Zero(basis[0].rows(), basis[0].cols());
  for (std::size_t i = 0; i < basis.size(); ++i) {
    M += theta(static_cast<Eigen::Index>(i)) * basis[i];
  }
  return M;
}

Vector md_realization(const Vector& x, const Vector& u, const Vector& theta,
                      const std::vector<Matrix>& basis) {
  Vector xu(x.size() + u.size());
  xu << x, u;
  return combine_basis(basis, theta) * xu;
}

}  // namespace tube_rmpc
