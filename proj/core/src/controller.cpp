#include "tube_rmpc/controller.hpp"

#include <cmath>

#include "tube_rmpc/error.hpp"
#include "tube_rmpc/geometry/io.hpp"

namespace tube_rmpc {

using geometry::HPolytope;
using geometry::VPolytope;

std::string_view to_string(RowFamily family) {
  switch (family) {
    case RowFamily::kContainer: return "container";
    case RowFamily::kAdmissible: return "admissible";
    case RowFamily::kTerminal: return "terminal";
    case RowFamily::kNonnegative: return "nonnegative";
  }
  return "unknown";
}

int ControllerData::expected_constraints() const {
  return N * (Z_m.num_facets() + Z.num_facets()) + S_inf.num_facets() + N;
}

namespace {

Matrix make_pi(const ControllerData& d) {
  Matrix Pi(d.n + d.m, d.n);
  Pi << Matrix::Identity(d.n, d.n), d.K;
  return Pi;
}

// Fills the inequality template from the offsets.
void assemble(ControllerData& d) {
  const int n = d.n, m = d.m, N = d.N;
  const int nv = d.num_variables();
  const int rows = d.expected_constraints();
  const Matrix Pi = make_pi(d);
  d.G = Matrix::Zero(rows, nv);
  d.G_x = Matrix::Zero(rows, n);
  d.g0 = Vector::Zero(rows);
  d.rows.clear();
  d.rows.reserve(rows);

  // Columns of x̄(k) with respect to v: (A_cl)^{k−1−j} B_n for j < k.
  auto state_block = [&](const Matrix& Hx, int k, int r0) {
    for (int j = 0; j < k; ++j) {
      d.G.block(r0, j * m, Hx.rows(), m) += Hx * d.powers[k - 1 - j] * d.B_n;
    }
    d.G_x.middleRows(r0, Hx.rows()) = -Hx * d.powers[k];
  };

  int r = 0;
  for (int k = 0; k < N; ++k) {
    for (const RowFamily fam : {RowFamily::kContainer, RowFamily::kAdmissible}) {
      const bool container = fam == RowFamily::kContainer;
      const HPolytope& ref = container ? d.Z_m : d.Z;
      const std::vector<Vector>& md = container ? d.dZm_md : d.dZ_md;
      const Vector& w = container ? d.dZm_w[k] : d.dZ_w[k];
      const int nr = ref.num_facets();
      state_block(ref.H() * Pi, k, r);
      d.G.block(r, k * m, nr, m) += ref.H().rightCols(m);
      for (int i = 0; i < k; ++i) d.G.block(r, N * m + (k - 1 - i), nr, 1) += md[i];
      if (container) {
        d.G.block(r, N * m + k, nr, 1) -= ref.h();
        d.g0.segment(r, nr) = -w;
      } else {
        d.g0.segment(r, nr) = ref.h() - w;
      }
      for (int f = 0; f < nr; ++f) d.rows.push_back({fam, k, f});
      r += nr;
    }
  }
  {
    const int nr = d.S_inf.num_facets();
    state_block(d.S_inf.H(), N, r);
    for (int i = 0; i < N; ++i) d.G.block(r, N * m + (N - 1 - i), nr, 1) += d.dS_md[i];
    d.g0.segment(r, nr) = d.S_inf.h() - d.dS_w[N];
    for (int f = 0; f < nr; ++f) d.rows.push_back({RowFamily::kTerminal, N, f});
    r += nr;
  }
  for (int k = 0; k < N; ++k) {
    d.G(r, N * m + k) = -1.0;
    d.rows.push_back({RowFamily::kNonnegative, k, 0});
    ++r;
  }
}

void compute_offsets(ControllerData& d, const VPolytope& W, const VPolytope& PZ) {
  const Matrix Pi = make_pi(d);
  auto fill = [&](const Matrix& H, const Matrix& map, std::vector<Vector>& md,
                  std::vector<Vector>& w) {
    md.clear();
    w.assign(1, Vector::Zero(H.rows()));
    for (int i = 0; i < d.N; ++i) {
      const Matrix M = H * map * d.powers[i];
      md.push_back(geometry::support_rows(M, PZ));
      w.push_back(w.back() + geometry::support_rows(M, W));
    }
  };
  fill(d.Z_m.H(), Pi, d.dZm_md, d.dZm_w);
  fill(d.Z.H(), Pi, d.dZ_md, d.dZ_w);
  fill(d.S_inf.H(), Matrix::Identity(d.n, d.n), d.dS_md, d.dS_w);
}

void compute_powers(ControllerData& d) {
  d.powers.assign(1, Matrix::Identity(d.n, d.n));
  for (int i = 1; i <= d.N; ++i) d.powers.push_back(d.A_cl * d.powers.back());
}

void check_psi(const Matrix& psi, int m) {
  if (psi.rows() != m || psi.cols() != m) {
    throw Error(ErrorCode::kDimensionMismatch, "psi must be m x m");
  }
  if ((psi - psi.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, psi.norm())) {
    throw Error(ErrorCode::kInvalidArgument, "psi must be symmetric");
  }
  if (Eigen::LLT<Matrix>(psi).info() != Eigen::Success) {
    throw Error(ErrorCode::kInvalidArgument, "psi must be positive definite");
  }
}

}  // namespace

ControllerData offline_prepare(const UncertainSystem& sys, const Container& c,
                               const TerminalSet& terminal, int N, const Matrix& psi) {
  if (N < 1) throw Error(ErrorCode::kInvalidArgument, "horizon must be at least 1");
  check_psi(psi, sys.m());
  ControllerData d;
  d.n = sys.n();
  d.m = sys.m();
  d.N = N;
  d.psi = psi;
  d.A_n = sys.A_n;
  d.B_n = sys.B_n;
  d.K = sys.K;
  d.A_cl = sys.A_cl();
  d.Z_m = c.Z_m;
  d.Z = sys.Z;
  d.S_inf = terminal.S_inf;
  d.W = sys.W_vertices;
  d.PZ_m = c.PZ_m;
  d.gamma_inf = terminal.gamma_inf;
  d.lambda_inf = terminal.lambda_inf.value;
  compute_powers(d);
  compute_offsets(d, d.W, d.PZ_m);
  assemble(d);
  return d;
}

nlohmann::json controller_to_json(const ControllerData& d) {
  using geometry::matrix_to_json;
  using geometry::vector_to_json;
  auto vecs = [](const std::vector<Vector>& vs) {
    nlohmann::json a = nlohmann::json::array();
    for (const Vector& v : vs) a.push_back(vector_to_json(v));
    return a;
  };
  nlohmann::json j;
  j["n"] = d.n;
  j["m"] = d.m;
  j["N"] = d.N;
  j["psi"] = matrix_to_json(d.psi);
  j["A_n"] = matrix_to_json(d.A_n);
  j["B_n"] = matrix_to_json(d.B_n);
  j["K"] = matrix_to_json(d.K);
  j["Z_m"] = geometry::to_json(d.Z_m);
  j["Z"] = geometry::to_json(d.Z);
  j["S_inf"] = geometry::to_json(d.S_inf);
  j["W"] = geometry::to_json(d.W);
  j["PZ_m"] = geometry::to_json(d.PZ_m);
  j["gamma_inf"] = d.gamma_inf;
  j["lambda_inf"] = d.lambda_inf;
  j["dZm_md"] = vecs(d.dZm_md);
  j["dZ_md"] = vecs(d.dZ_md);
  j["dS_md"] = vecs(d.dS_md);
  j["dZm_w"] = vecs(d.dZm_w);
  j["dZ_w"] = vecs(d.dZ_w);
  j["dS_w"] = vecs(d.dS_w);
  j["num_variables"] = d.num_variables();
  j["num_constraints"] = d.num_constraints();
  return j;
}

ControllerData controller_from_json(const nlohmann::json& j) {
  using geometry::matrix_from_json;
  using geometry::vector_from_json;
  auto vecs = [](const nlohmann::json& a) {
    std::vector<Vector> out;
    for (const auto& v : a) out.push_back(vector_from_json(v));
    return out;
  };
  ControllerData d;
  d.n = j.at("n").get<int>();
  d.m = j.at("m").get<int>();
  d.N = j.at("N").get<int>();
  d.psi = matrix_from_json(j.at("psi"));
  d.A_n = matrix_from_json(j.at("A_n"));
  d.B_n = matrix_from_json(j.at("B_n"));
  d.K = matrix_from_json(j.at("K"));
  d.A_cl = d.A_n + d.B_n * d.K;
  d.Z_m = geometry::as_hpolytope(geometry::polytope_from_json(j.at("Z_m")));
  d.Z = geometry::as_hpolytope(geometry::polytope_from_json(j.at("Z")));
  d.S_inf = geometry::as_hpolytope(geometry::polytope_from_json(j.at("S_inf")));
  d.W = geometry::as_vpolytope(geometry::polytope_from_json(j.at("W")));
  d.PZ_m = geometry::as_vpolytope(geometry::polytope_from_json(j.at("PZ_m")));
  d.gamma_inf = j.at("gamma_inf").get<double>();
  d.lambda_inf = j.at("lambda_inf").get<double>();
  d.dZm_md = vecs(j.at("dZm_md"));
  d.dZ_md = vecs(j.at("dZ_md"));
  d.dS_md = vecs(j.at("dS_md"));
  d.dZm_w = vecs(j.at("dZm_w"));
  d.dZ_w = vecs(j.at("dZ_w"));
  d.dS_w = vecs(j.at("dS_w"));
  check_psi(d.psi, d.m);
  if (static_cast<int>(d.dZm_md.size()) != d.N || static_cast<int>(d.dZm_w.size()) != d.N + 1 ||
      static_cast<int>(d.dZ_md.size()) != d.N || static_cast<int>(d.dZ_w.size()) != d.N + 1 ||
      static_cast<int>(d.dS_md.size()) != d.N || static_cast<int>(d.dS_w.size()) != d.N + 1) {
    throw Error(ErrorCode::kDimensionMismatch, "offset tables do not match the horizon");
  }
  compute_powers(d);
  assemble(d);
  return d;
}

geometry::QuadraticProgram build_qp(const ControllerData& d, const Vector& x) {
  if (x.size() != d.n) throw Error(ErrorCode::kDimensionMismatch, "state dimension");
  const int nv = d.num_variables();
  geometry::QuadraticProgram qp;
  qp.P = Matrix::Zero(nv, nv);
  for (int k = 0; k < d.N; ++k) qp.P.block(k * d.m, k * d.m, d.m, d.m) = 2.0 * d.psi;
  qp.c = Vector::Zero(nv);
  qp.G = d.G;
  qp.g = d.g0 + d.G_x * x;
  qp.A = Matrix(0, nv);
  qp.b = Vector(0);
  return qp;
}

double max_violation(const ControllerData& d, const Vector& x, const Vector& z) {
  const Vector slack = d.G * z - (d.g0 + d.G_x * x);
  double worst = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < slack.size(); ++r) {
    worst = std::max(worst, slack(r) / d.G.row(r).norm());
  }
  return worst;
}

Matrix predict_nominal(const ControllerData& d, const Vector& x, const Vector& v) {
  Matrix xs(d.n, d.N + 1);
  xs.col(0) = x;
  for (int k = 0; k < d.N; ++k) {
    xs.col(k + 1) = d.A_cl * xs.col(k) + d.B_n * v.segment(k * d.m, d.m);
  }
  return xs;
}

namespace {

// Retries an active-set breakdown: an LP feasibility check settles infeasible
// states, feasible ones are re-solved with a stronger regularization.
geometry::QpResult robust_solve(const geometry::QuadraticProgram& qp,
                                const geometry::QpSolver& solver) {
  try {
    return solver.solve(qp);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kSolverFailure) throw;
  }
  geometry::LinearProgram lp{Vector::Zero(qp.P.rows()), qp.G, qp.g, qp.A, qp.b};
  if (!geometry::default_lp_solver().solve(lp).optimal()) {
    geometry::QpResult out;
    out.status = geometry::SolveStatus::kInfeasible;
    return out;
  }
  geometry::DualActiveSetQpSolver::Options opts;
  opts.regularization = 1e-6;
  return geometry::DualActiveSetQpSolver(opts).solve(qp);
}

}  // namespace

Vector ControlResult::z() const {
  Vector out(v.size() + lambda.size());
  out << v, lambda;
  return out;
}

ControlResult solve_step(const ControllerData& d, const Vector& x,
                         const std::optional<Vector>& candidate,
                         const geometry::QpSolver& solver) {
  const geometry::QuadraticProgram qp = build_qp(d, x);
  const geometry::QpResult res = robust_solve(qp, solver);
  ControlResult out;
  out.x = x;
  out.status = res.status;
  out.iterations = res.iterations;
  out.active_rows = res.active_set;
  Vector z = res.z;
  if (candidate) {
    if (candidate->size() != d.num_variables()) {
      throw Error(ErrorCode::kDimensionMismatch, "candidate length");
    }
    out.candidate_violation = max_violation(d, x, *candidate);
    if (!res.optimal() && *out.candidate_violation <= 1e-7) {
      out.status = geometry::SolveStatus::kOptimal;
      z = *candidate;
    }
  }
  if (!out.optimal()) return out;
  const int nvm = d.N * d.m;
  out.v = z.head(nvm);
  out.lambda = z.tail(d.N);
  out.u = d.K * x + out.v.head(d.m);
  out.cost = 0.0;
  for (int k = 0; k < d.N; ++k) {
    const auto vk = out.v.segment(k * d.m, d.m);
    out.cost += vk.dot(d.psi * vk);
  }
  return out;
}

Vector shifted_candidate(const ControlResult& prev, const ControllerData& d) {
  if (!prev.optimal()) {
    throw Error(ErrorCode::kInvalidArgument, "shifted candidate needs an optimal solve");
  }
  const int nvm = d.N * d.m;
  Vector z = Vector::Zero(d.num_variables());
  z.head(nvm - d.m) = prev.v.tail(nvm - d.m);
  z.segment(nvm, d.N - 1) = prev.lambda.tail(d.N - 1);
  z(nvm + d.N - 1) = d.gamma_inf;
  return z;
}

Vector lambda_tighten(const Vector& v, const ControllerData& d, const Vector& x) {
  const Matrix xs = predict_nominal(d, x, v);
  const Matrix Pi = make_pi(d);
  Vector out = Vector::Zero(d.N);
  for (int k = 0; k < d.N; ++k) {
    Vector lhs = d.Z_m.H() * Pi * xs.col(k) +
                 d.Z_m.H().rightCols(d.m) * v.segment(k * d.m, d.m) + d.dZm_w[k];
    for (int i = 0; i < k; ++i) lhs += out(k - 1 - i) * d.dZm_md[i];
    double lam = 0.0;
    for (int r = 0; r < lhs.size(); ++r) lam = std::max(lam, lhs(r) / d.Z_m.h()(r));
    out(k) = lam;
  }
  return out;
}

}  // namespace tube_rmpc
