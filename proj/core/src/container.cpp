#include "tube_rmpc/container.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "tube_rmpc/error.hpp"

namespace tube_rmpc {

using geometry::HPolytope;
using geometry::VPolytope;

namespace {

Container finish_container(const UncertainSystem& sys, HPolytope Z_m, VPolytope V) {
  if (!Z_m.origin_interior()) {
    throw Error(ErrorCode::kInvalidArgument,
                "container must contain the origin in its interior");
  }
  if (Z_m.dim() != sys.n() + sys.m()) {
    throw Error(ErrorCode::kDimensionMismatch, "container must live in R^(n+m)");
  }
  Container c;
  c.X_m = state_slice(Z_m, sys.K);
  c.PZ_m = md_image(sys.dP_vertices, V);
  c.Z_m = std::move(Z_m);
  c.Z_m_vertices = std::move(V);
  return c;
}

}  // namespace

Container make_container(const UncertainSystem& sys, const HPolytope& Z_m) {
  const HPolytope reduced = geometry::remove_redundancy(Z_m);
  return finish_container(sys, reduced, geometry::vertex_enum(reduced));
}

Container make_container(const UncertainSystem& sys, const VPolytope& Z_m) {
  const VPolytope V = Z_m.canonical();
  return finish_container(sys, geometry::facet_enum(V), V);
}

VPolytope md_image(const std::vector<Matrix>& dP_vertices, const VPolytope& Z) {
  if (dP_vertices.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "uncertainty set has no vertices");
  }
  const auto rows = dP_vertices[0].rows();
  Matrix pts(rows, static_cast<Eigen::Index>(dP_vertices.size()) * Z.num_vertices());
  Eigen::Index k = 0;
  for (const Matrix& dP : dP_vertices) {
    if (dP.cols() != Z.dim() || dP.rows() != rows) {
      throw Error(ErrorCode::kDimensionMismatch, "uncertainty vertex shape");
    }
    pts.middleCols(k, Z.num_vertices()) = dP * Z.vertices();
    k += Z.num_vertices();
  }
  return VPolytope(pts).canonical();
}

HPolytope container_preimage(const std::vector<Matrix>& dP_vertices, const HPolytope& WM,
                             const std::optional<HPolytope>& box) {
  if (!WM.origin_interior()) {
    throw Error(ErrorCode::kInvalidArgument,
                "MD image must contain the origin in its interior");
  }
  const auto nz = dP_vertices.at(0).cols();
  Matrix H(0, nz);
  Vector h(0);
  for (const Matrix& dP : dP_vertices) {
    const HPolytope part = geometry::preimage(WM, dP);
    H.conservativeResize(H.rows() + part.num_facets(), nz);
    h.conservativeResize(h.size() + part.num_facets());
    H.bottomRows(part.num_facets()) = part.H();
    h.tail(part.num_facets()) = part.h();
  }
  if (box) {
    H.conservativeResize(H.rows() + box->num_facets(), nz);
    h.conservativeResize(h.size() + box->num_facets());
    H.bottomRows(box->num_facets()) = box->H();
    h.tail(box->num_facets()) = box->h();
  }
  if (H.rows() == 0) {
    throw Error(ErrorCode::kUnbounded, "every uncertainty vertex annihilates the space");
  }
  return geometry::remove_redundancy(HPolytope(H, h));
}

HPolytope preimage_box(const HPolytope& Z, double factor) {
  const int d = Z.dim();
  Vector lo(d), hi(d);
  double widest = 0.0;
  for (int i = 0; i < d; ++i) {
    const Vector e = Vector::Unit(d, i);
    hi(i) = std::numeric_limits<double>::infinity();
    lo(i) = -std::numeric_limits<double>::infinity();
    try {
      hi(i) = geometry::support(Z, e);
      widest = std::max(widest, std::abs(hi(i)));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kUnbounded) throw;
    }
    try {
      lo(i) = -geometry::support(Z, -e);
      widest = std::max(widest, std::abs(lo(i)));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kUnbounded) throw;
    }
  }
  if (widest == 0.0) widest = 1.0;
  for (int i = 0; i < d; ++i) {
    hi(i) = std::isfinite(hi(i)) ? factor * hi(i) : factor * widest;
    lo(i) = std::isfinite(lo(i)) ? factor * lo(i) : -factor * widest;
  }
  return HPolytope::box(lo, hi);
}

VPolytope default_container(int n, int m, int n_theta, int n_phi) {
  const int d = n + m;
  if (d < 1) throw Error(ErrorCode::kInvalidArgument, "empty state-input space");
  if (d == 3) {
    if (n_theta < 2 || n_phi < 2) {
      throw Error(ErrorCode::kInvalidArgument, "angle grid needs at least 2 points");
    }
    Matrix V(3, n_theta * n_phi);
    int k = 0;
    for (int i = 0; i < n_theta; ++i) {
      const double th = 2.0 * std::numbers::pi * i / (n_theta - 1);
      for (int j = 0; j < n_phi; ++j) {
        const double ph = 2.0 * std::numbers::pi * j / (n_phi - 1);
        V.col(k++) << std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph),
            std::cos(th);
      }
    }
    const VPolytope out = VPolytope(V).canonical();
    if (out.num_vertices() < 4) {
      throw Error(ErrorCode::kDegenerate, "angle grid yields a flat container");
    }
    return out;
  }
  if (d > 4) throw Error(ErrorCode::kInvalidArgument, "container dimension above 4");
  Matrix V(d, 2 * d + (1 << d));
  int k = 0;
  for (int i = 0; i < d; ++i) {
    V.col(k++) = Vector::Unit(d, i);
    V.col(k++) = -Vector::Unit(d, i);
  }
  for (int s = 0; s < (1 << d); ++s) {
    for (int i = 0; i < d; ++i) V(i, k) = ((s >> i) & 1 ? 1.0 : -1.0) / std::sqrt(d);
    ++k;
  }
  return VPolytope(V).canonical();
}

Matrix wm_constraint_rows(const UncertainSystem& sys, const WmRelaxation& relax,
                          const WmReferenceSets& refs) {
  const int n = sys.n();
  const Matrix Acl = sys.A_cl();
  const Matrix Pi = sys.Pi();
  Matrix rows(0, n);
  auto append = [&](const Matrix& R) {
    rows.conservativeResize(rows.rows() + R.rows(), n);
    rows.bottomRows(R.rows()) = R;
  };
  auto need = [](const auto& opt, const char* what) -> const HPolytope& {
    if (!opt) {
      throw Error(ErrorCode::kInvalidArgument,
                  std::string("relaxation keeps a family that needs ") + what);
    }
    return *opt;
  };
  Matrix power = Matrix::Identity(n, n);
  for (int i = 1; i <= relax.N_i; ++i) {
    power = Acl * power;
    if (relax.keep_Z) append(sys.Z.H() * Pi * power);
    if (relax.keep_Z_m0) append(need(refs.Z_m0, "the initial container").H() * Pi * power);
    if (relax.keep_S_inf0) append(need(refs.S_inf0, "the initial terminal set").H() * power);
  }
  if (relax.keep_S_chain) {
    if (static_cast<int>(refs.S_chain.size()) < relax.N_j) {
      throw Error(ErrorCode::kInvalidArgument, "terminal recursion chain shorter than N_j");
    }
    for (int j = 0; j < relax.N_j; ++j) append(refs.S_chain[j].H());
  }
  return rows;
}

WmOptimization optimize_wm(const VPolytope& WM0, const Matrix& rows,
                           const std::vector<double>& weights,
                           const geometry::LpSolver& lp) {
  const int L = WM0.num_vertices();
  if (rows.cols() != WM0.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "constraint rows vs MD image");
  }
  if (!weights.empty() && static_cast<int>(weights.size()) != L) {
    throw Error(ErrorCode::kDimensionMismatch, "one weight per vertex");
  }
  if (rows.rows() == 0) {
    throw Error(ErrorCode::kUnbounded, "no constraint rows bound the MD image");
  }
  const Matrix proj = rows * WM0.vertices();  // r·w_l
  const Vector cap = proj.rowwise().maxCoeff();
  const double scale = std::max(1.0, proj.cwiseAbs().maxCoeff());

  geometry::LinearProgram prog;
  prog.cost = Vector::Constant(L, -1.0);
  for (int l = 0; l < static_cast<int>(weights.size()); ++l) prog.cost(l) = -weights[l];
  std::vector<std::pair<int, int>> caps;
  for (int r = 0; r < proj.rows(); ++r) {
    for (int l = 0; l < L; ++l) {
      if (proj(r, l) > 1e-14 * scale) caps.emplace_back(r, l);
    }
  }
  prog.G = Matrix::Zero(static_cast<Eigen::Index>(caps.size()) + L, L);
  prog.g = Vector::Zero(prog.G.rows());
  for (std::size_t k = 0; k < caps.size(); ++k) {
    const auto [r, l] = caps[k];
    prog.G(static_cast<Eigen::Index>(k), l) = proj(r, l);
    prog.g(static_cast<Eigen::Index>(k)) = cap(r);
  }
  for (int l = 0; l < L; ++l) {
    prog.G(static_cast<Eigen::Index>(caps.size()) + l, l) = -1.0;
    prog.g(static_cast<Eigen::Index>(caps.size()) + l) = -1.0;
  }
  prog.A = Matrix(0, L);
  prog.b = Vector(0);
  const geometry::LpResult res = lp.solve(prog);
  if (res.status == geometry::SolveStatus::kUnbounded) {
    throw Error(ErrorCode::kUnbounded,
                "some MD-image vertex is unconstrained by the kept families");
  }
  if (!res.optimal()) {
    throw Error(ErrorCode::kSolverFailure, "MD-image enlargement LP not solved");
  }
  WmOptimization out;
  out.beta = res.z.cwiseMax(1.0);
  out.WM = VPolytope(WM0.vertices() * out.beta.asDiagonal()).canonical();
  return out;
}

WmOptimization optimize_wm(const UncertainSystem& sys, const VPolytope& WM0,
                           const WmRelaxation& relax, const WmReferenceSets& refs) {
  return optimize_wm(WM0, wm_constraint_rows(sys, relax, refs), relax.weights);
}

ContainerChain build_container_chain(const UncertainSystem& sys, int n_theta, int n_phi,
                                     const WmRelaxation& relax,
                                     const WmReferenceSets& refs) {
  ContainerChain chain{
      make_container(sys, default_container(sys.n(), sys.m(), n_theta, n_phi)),
      {}, {}, {}, {}, {}};
  chain.WM0 = chain.Z0.PZ_m;
  const HPolytope box = preimage_box(sys.Z);
  chain.Z1 = make_container(
      sys, container_preimage(sys.dP_vertices, geometry::facet_enum(chain.WM0), box));

  WmReferenceSets r = refs;
  if (relax.keep_Z_m0 && !r.Z_m0) r.Z_m0 = chain.Z0.Z_m;
  const WmOptimization opt = optimize_wm(sys, chain.WM0, relax, r);
  chain.WM_opt = opt.WM;
  chain.beta = opt.beta;
  chain.Z2 = make_container(
      sys, container_preimage(sys.dP_vertices, geometry::facet_enum(opt.WM), box));
  return chain;
}

}  // namespace tube_rmpc
