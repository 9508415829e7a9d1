#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tube_rmpc/container.hpp"
#include "tube_rmpc/geometry/qp.hpp"
#include "tube_rmpc/terminal.hpp"

namespace tube_rmpc {

// Constraint family of a QP row.
enum class RowFamily { kContainer, kAdmissible, kTerminal, kNonnegative };

std::string_view to_string(RowFamily family);

struct RowTag {
  RowFamily family;
  int k;      // prediction step (N for terminal rows)
  int facet;  // row of the reference set
};

// Everything the online problem needs, computed once.
struct ControllerData {
  int n = 0;
  int m = 0;
  int N = 0;
  Matrix psi;
  Matrix A_n, B_n, K, A_cl;
  std::vector<Matrix> powers;  // A_cl^i, i = 0..N

  // Reference sets: container Z_m and constraints Z in ℝ^{n+m}, terminal set
  // in ℝⁿ.
  geometry::HPolytope Z_m, Z, S_inf;
  geometry::VPolytope W;
  geometry::VPolytope PZ_m;

  // Offsets against each reference set. *_md[i]: support of (A_cl)^i PZ_m
  // (through Π for Z_m and Z), i < N. *_w[k]: support of Σ_{i<k} (A_cl)^i W,
  // k ≤ N.
  std::vector<Vector> dZm_md, dZ_md, dS_md;
  std::vector<Vector> dZm_w, dZ_w, dS_w;

  double gamma_inf = 0.0;
  double lambda_inf = 0.0;

  // Inequalities G z ≤ g0 + G_x x over z = (v(0..N−1), λ(0..N−1)).
  Matrix G;
  Matrix G_x;
  Vector g0;
  std::vector<RowTag> rows;

  int num_variables() const { return N * m + N; }
  int num_constraints() const { return static_cast<int>(G.rows()); }
  // N (lcon(Z_m) + lcon(Z)) + lcon(S_inf) + N
  int expected_constraints() const;
};

ControllerData offline_prepare(const UncertainSystem& sys, const Container& c,
                               const TerminalSet& terminal, int N, const Matrix& psi);

nlohmann::json controller_to_json(const ControllerData& data);
ControllerData controller_from_json(const nlohmann::json& j);

// The online problem at state x.
geometry::QuadraticProgram build_qp(const ControllerData& data, const Vector& x);

// Largest violation of G z ≤ g(x) over rows scaled to unit norm.
double max_violation(const ControllerData& data, const Vector& x, const Vector& z);

// Predicted nominal states x̄(0..N) (columns) for input corrections v.
Matrix predict_nominal(const ControllerData& data, const Vector& x, const Vector& v);

struct ControlResult {
  geometry::SolveStatus status = geometry::SolveStatus::kInfeasible;
  Vector x;
  Vector u;
  Vector v;       // N·m stacked corrections
  Vector lambda;  // N container scales
  double cost = 0.0;
  std::vector<int> active_rows;
  int iterations = 0;
  // Set when a candidate was supplied: its largest row violation.
  std::optional<double> candidate_violation;

  bool optimal() const { return status == geometry::SolveStatus::kOptimal; }
  Vector z() const;
};

// Solves the online problem at x. A supplied candidate is checked for
// feasibility; when the solver reports infeasibility although the candidate
// is feasible, the candidate is returned instead (with its own cost).
ControlResult solve_step(const ControllerData& data, const Vector& x,
                         const std::optional<Vector>& candidate = std::nullopt,
                         const geometry::QpSolver& qp = geometry::default_qp_solver());

// (v*(1..N−1), 0) and (λ*(1..N−1), γ_∞).
Vector shifted_candidate(const ControlResult& prev, const ControllerData& data);

// Smallest container scales compatible with the corrections v, computed
// forward in k because each tube cross-section depends on the earlier scales.
// Componentwise no larger than any λ that is feasible together with v.
Vector lambda_tighten(const Vector& v, const ControllerData& data, const Vector& x);

}  // namespace tube_rmpc
