#include <doctest.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "tube_rmpc/error.hpp"

using namespace tube_rmpc;
using namespace tube_rmpc::geometry;

namespace {

// Scalar plant with both disturbance sources present, so every offset table
// is nonzero.
struct ScalarToy {
  UncertainSystem sys;
  Container c;
  TerminalSet T;
  ControllerData d;
};

ScalarToy scalar_toy(int N) {
  ScalarToy t;
  const Matrix A = Matrix::Constant(1, 1, 0.9), B = Matrix::Constant(1, 1, 1.0);
  const Matrix K = Matrix::Constant(1, 1, -0.2);
  const Matrix dP = (Matrix(1, 2) << 0.05, 0.02).finished();
  t.sys = make_system(A, B, K, {dP, -dP}, HPolytope::box(1, 0.1),
                      HPolytope::box((Vector(2) << -5, -1).finished(), (Vector(2) << 5, 1).finished()));
  t.c = make_container(t.sys, default_container(1, 1));
  const GammaBounds b = gamma_bounds(t.sys, t.c);
  t.T = output_admissible_set(t.sys, t.c, 0.5 * (b.lo + b.hi));
  t.d = offline_prepare(t.sys, t.c, t.T, N, Matrix::Identity(1, 1));
  return t;
}

double vertex_support(const Vector& row, const Matrix& M, const Matrix& V) {
  return (row.transpose() * M * V).maxCoeff();
}

}  // namespace

TEST_CASE("problem rows expand the tightened constraints term by term") {
  const ScalarToy t = scalar_toy(3);
  const ControllerData& d = t.d;
  const int N = d.N, nv = N * d.m;
  const double a = d.A_cl(0, 0), b = d.B_n(0, 0);
  const Matrix Pi = t.sys.Pi();
  const Matrix W = t.sys.W_vertices.vertices();
  const Matrix PZ = t.c.PZ_m.vertices();
  auto power = [](double x, int k) { return std::pow(x, k); };

  REQUIRE(d.num_constraints() == static_cast<int>(d.rows.size()));
  for (int i = 0; i < d.num_constraints(); ++i) {
    const RowTag tag = d.rows[i];
    Vector G = Vector::Zero(d.num_variables());
    double g0 = 0.0, gx = 0.0;
    const int k = tag.k;
    if (tag.family == RowFamily::kNonnegative) {
      G(nv + k) = -1.0;
    } else {
      const bool terminal = tag.family == RowFamily::kTerminal;
      const HPolytope& ref = tag.family == RowFamily::kContainer ? d.Z_m
                             : tag.family == RowFamily::kAdmissible ? d.Z
                                                                    : d.S_inf;
      const Vector r = ref.H().row(tag.facet).transpose();
      const Matrix map = terminal ? Matrix::Identity(1, 1) : Pi;
      const double rx = (r.transpose() * map)(0, 0);
      for (int j = 0; j < k; ++j) G(j) = rx * power(a, k - 1 - j) * b;
      if (!terminal) G(k) = r(1);
      for (int j = 0; j < k; ++j) {
        G(nv + j) = vertex_support(r, map * Matrix::Constant(1, 1, power(a, k - 1 - j)), PZ);
      }
      double w_sum = 0.0;
      for (int j = 0; j < k; ++j) {
        w_sum += vertex_support(r, map * Matrix::Constant(1, 1, power(a, j)), W);
      }
      if (tag.family == RowFamily::kContainer) {
        G(nv + k) = -ref.h()(tag.facet);
        g0 = -w_sum;
      } else {
        g0 = ref.h()(tag.facet) - w_sum;
      }
      gx = -rx * power(a, k);
    }
    CHECK((d.G.row(i).transpose() - G).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(d.g0(i) == doctest::Approx(g0).epsilon(1e-12));
    CHECK(d.G_x(i, 0) == doctest::Approx(gx).epsilon(1e-12));
  }
}

TEST_CASE("problem dimensions and cost structure") {
  for (int N : {1, 2, 5}) {
    const ScalarToy t = scalar_toy(N);
    const ControllerData& d = t.d;
    CHECK(d.num_variables() == N * d.m + N);
    CHECK(d.num_constraints() ==
          N * (d.Z_m.num_facets() + d.Z.num_facets()) + d.S_inf.num_facets() + N);
    CHECK(d.num_constraints() == d.expected_constraints());
    const Vector x1 = Vector::Constant(1, 0.7), x2 = Vector::Constant(1, -1.3);
    const QuadraticProgram q1 = build_qp(d, x1), q2 = build_qp(d, x2),
                           q0 = build_qp(d, Vector::Zero(1)), q12 = build_qp(d, x1 + x2);
    CHECK(q1.G == q2.G);
    CHECK((q12.g - (q1.g + q2.g - q0.g)).cwiseAbs().maxCoeff() <= 1e-12);
    Matrix P = Matrix::Zero(2 * N, 2 * N);
    P.topLeftCorner(N, N) = 2.0 * Matrix::Identity(N, N);
    CHECK(q1.P == P);
    CHECK(q1.c.isZero());
  }
  const ScalarToy t = scalar_toy(1);
  for (const auto* table : {&t.d.dZm_w, &t.d.dZ_w, &t.d.dS_w}) {
    CHECK(table->front().isZero());
  }
  CHECK_THROWS_AS(offline_prepare(t.sys, t.c, t.T, 0, Matrix::Identity(1, 1)), Error);
  CHECK_THROWS_AS(offline_prepare(t.sys, t.c, t.T, 3, -Matrix::Identity(1, 1)), Error);
}

TEST_CASE("offset tables") {
  const auto& ref = fixture::reference();
  const ControllerData& d = ref.controller2;
  for (const auto* table : {&d.dZm_w, &d.dZ_w, &d.dS_w, &d.dZm_md, &d.dZ_md, &d.dS_md}) {
    for (const auto& v : *table) CHECK(v.minCoeff() >= 0.0);
  }
  for (std::size_t k = 1; k < d.dZ_w.size(); ++k) {
    CHECK(((d.dZ_w[k] - d.dZ_w[k - 1]).array() >= -1e-15).all());
  }
  // Against explicitly constructed sums for small k.
  for (int k = 0; k <= 3; ++k) {
    const VPolytope sum = linear_map(ref.sys.Pi(), oracle::explicit_power_sum(d.A_cl, d.W, k));
    CHECK((support_rows(d.Z.H(), sum) - d.dZ_w[k]).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((support_rows(d.Z_m.H(), sum) - d.dZm_w[k]).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("solves on the reference example") {
  const auto& ref = fixture::reference();
  const ControllerData& d = ref.controller2;

  const ControlResult origin = solve_step(d, Vector::Zero(2));
  REQUIRE(origin.optimal());
  CHECK(origin.cost == doctest::Approx(0.0));
  CHECK(origin.v.cwiseAbs().maxCoeff() <= 1e-9);

  // A state deep inside the terminal set needs no correction.
  const Vector inner = 0.05 * ref.terminal2.S_inf_vertices.vertices().col(0);
  const ControlResult deep = solve_step(d, inner);
  REQUIRE(deep.optimal());
  CHECK(deep.cost <= 1e-12);

  const ControlResult r = solve_step(d, ref.x0);
  REQUIRE(r.optimal());
  CHECK(r.u.isApprox(d.K * ref.x0 + r.v.head(1)));
  CHECK(max_violation(d, ref.x0, r.z()) <= 1e-9);
  CHECK(r.cost == doctest::Approx(r.v.squaredNorm()));

  const ControlResult far = solve_step(d, (Vector(2) << 100, 100).finished());
  CHECK(far.status == SolveStatus::kInfeasible);
}

TEST_CASE("shifted candidate and tightened scales") {
  const auto& ref = fixture::reference();
  const ControllerData& d = ref.controller2;
  const ControlResult r = solve_step(d, ref.x0);
  REQUIRE(r.optimal());
  const Vector cand = shifted_candidate(r, d);
  CHECK(cand.head(9) == r.v.tail(9));
  CHECK(cand(9) == 0.0);
  CHECK(cand.segment(10, 9) == r.lambda.tail(9));
  CHECK(cand(19) == d.gamma_inf);
  const double cand_cost = cand.head(10).squaredNorm();
  CHECK(cand_cost == doctest::Approx(r.cost - r.v(0) * r.v(0)));

  // Feasible at the undisturbed successor state.
  const Vector next = d.A_cl * ref.x0 + d.B_n * r.v.head(1);
  CHECK(max_violation(d, next, cand) <= 1e-9);

  const Vector lam = lambda_tighten(r.v, d, ref.x0);
  CHECK((lam.array() <= r.lambda.array() + 1e-9).all());
  Vector z(20);
  z << r.v, lam;
  CHECK(max_violation(d, ref.x0, z) <= 1e-9);

  const Vector lam0 = lambda_tighten(Vector::Zero(10), d, Vector::Zero(2));
  CHECK(lam0(0) == 0.0);

  ControlResult bad;
  CHECK_THROWS_AS(shifted_candidate(bad, d), Error);
}

TEST_CASE("candidate fallback when the solver gives up") {
  // A solver that always claims infeasibility.
  struct Refuser : QpSolver {
    QpResult solve(const QuadraticProgram&) const override { return {}; }
  };
  const auto& ref = fixture::reference();
  const ControllerData& d = ref.controller2;
  const ControlResult r = solve_step(d, ref.x0);
  const Vector cand = shifted_candidate(r, d);
  const Vector next = d.A_cl * ref.x0 + d.B_n * r.v.head(1);
  const ControlResult fallback = solve_step(d, next, cand, Refuser{});
  CHECK(fallback.optimal());
  CHECK(fallback.z() == cand);
  CHECK(solve_step(d, next, std::nullopt, Refuser{}).status == SolveStatus::kInfeasible);
}

TEST_CASE("nominal prediction and persistence") {
  const auto& ref = fixture::reference();
  const ControllerData& d = ref.controller2;
  const Vector v = Vector::LinSpaced(10, -0.5, 0.5);
  const Matrix xs = predict_nominal(d, ref.x0, v);
  Vector x = ref.x0;
  for (int k = 0; k < 10; ++k) {
    CHECK((xs.col(k) - x).norm() <= 1e-12);
    x = nominal_step(ref.sys, x, v.segment(k, 1));
  }
  CHECK((xs.col(10) - x).norm() <= 1e-12);

  const ControllerData back = controller_from_json(nlohmann::json::parse(controller_to_json(d).dump()));
  const QuadraticProgram a = build_qp(d, ref.x0), b = build_qp(back, ref.x0);
  CHECK(a.G == b.G);
  CHECK(a.g == b.g);
  CHECK(back.gamma_inf == d.gamma_inf);
  CHECK(back.lambda_inf == d.lambda_inf);
}
