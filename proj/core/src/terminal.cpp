#include "tube_rmpc/terminal.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "tube_rmpc/error.hpp"

namespace tube_rmpc {

using geometry::HPolytope;
using geometry::VPolytope;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string trace_string(const std::vector<double>& trace) {
  std::ostringstream os;
  os.precision(10);
  for (std::size_t i = 0; i < trace.size(); ++i) os << (i ? ", " : "") << trace[i];
  return os.str();
}

}  // namespace

GammaBounds gamma_bounds(const UncertainSystem& sys, const Container& c) {
  const HPolytope X_xu = state_slice(sys.Z, sys.K);
  GammaBounds b;
  b.gamma_bar1 = geometry::min_scale_containment(X_xu, c.X_m);

  const Vector wx = geometry::support_rows(X_xu.H(), sys.W_vertices);
  const Vector px = geometry::support_rows(X_xu.H(), c.PZ_m);
  b.gamma_bar2 = kInf;
  for (int r = 0; r < X_xu.num_facets(); ++r) {
    if (px(r) > 0.0) b.gamma_bar2 = std::min(b.gamma_bar2, (X_xu.h()(r) - wx(r)) / px(r));
  }
  b.hi = std::min(b.gamma_bar1, b.gamma_bar2);

  const Vector wm = geometry::support_rows(c.X_m.H(), sys.W_vertices);
  const Vector pm = geometry::support_rows(c.X_m.H(), c.PZ_m);
  b.lo = 0.0;
  for (int r = 0; r < c.X_m.num_facets(); ++r) {
    const double denom = c.X_m.h()(r) - pm(r);
    if (denom <= 0.0) {
      b.lo = kInf;
      break;
    }
    b.lo = std::max(b.lo, wm(r) / denom);
  }
  if (!b.admissible()) {
    std::ostringstream os;
    os << "admissible scale interval is empty: lower " << b.lo << " > upper " << b.hi;
    throw Error(ErrorCode::kNoAdmissibleGamma, os.str());
  }
  return b;
}

LambdaInfinity lambda_infinity(const UncertainSystem& sys, const Container& c, int k_max) {
  if (k_max < 1) throw Error(ErrorCode::kInvalidArgument, "k_max must be at least 1");
  const Matrix Acl = sys.A_cl();
  const Matrix& H = c.X_m.H();
  Vector fw = Vector::Zero(H.rows());
  Vector fp = Vector::Zero(H.rows());
  Matrix power = Matrix::Identity(sys.n(), sys.n());
  for (int i = 0; i < k_max; ++i) {
    // Supports of Minkowski sums add up term by term.
    fw += geometry::support_rows(H * power, sys.W_vertices);
    fp += geometry::support_rows(H * power, c.PZ_m);
    power = Acl * power;
  }
  LambdaInfinity out;
  for (int r = 0; r < H.rows(); ++r) {
    const double denom = c.X_m.h()(r) - fp(r);
    if (denom <= 0.0) {
      throw Error(ErrorCode::kNoFiniteLambda,
                  "accumulated MD image does not fit inside the container slice");
    }
    out.value = std::max(out.value, fw(r) / denom);
  }
  const VPolytope tail =
      geometry::minkowski_sum(sys.W_vertices, c.PZ_m.scaled(out.value));
  double diam = 0.0;
  for (int i = 0; i < tail.num_vertices(); ++i) {
    for (int j = i + 1; j < tail.num_vertices(); ++j) {
      diam = std::max(diam, (tail.vertices().col(i) - tail.vertices().col(j)).norm());
    }
  }
  out.residual = power.operatorNorm() * diam;
  return out;
}

TerminalSet output_admissible_set(const UncertainSystem& sys, const Container& c,
                                  double gamma0, const TerminalOptions& options) {
  if (!(gamma0 > 0.0) || !std::isfinite(gamma0)) {
    throw Error(ErrorCode::kInvalidArgument, "initial scale must be positive");
  }
  const HPolytope X_xu = state_slice(sys.Z, sys.K);
  const Matrix Acl = sys.A_cl();

  TerminalSet out;
  out.gamma0 = gamma0;
  double gamma = gamma0;
  int iterations = 0;

  auto empty_error = [&](int n) {
    return Error(ErrorCode::kEmptyTerminalSet,
                 "S_" + std::to_string(n) + " is empty at scale " + std::to_string(gamma) +
                     " (scale trace: " + trace_string(out.gamma_trace) + ")");
  };

  while (true) {
    const HPolytope S0 = geometry::intersect(c.X_m.scaled(gamma), X_xu);
    if (S0.is_empty()) throw empty_error(0);
    std::vector<HPolytope> chain{S0};
    HPolytope S = S0;
    VPolytope S_vertices = geometry::vertex_enum(S);
    bool restarted = false;

    for (int n = 1;; ++n) {
      if (++iterations > options.max_iterations) {
        throw Error(ErrorCode::kIterationCap,
                    "terminal recursion did not converge in " +
                        std::to_string(options.max_iterations) +
                        " steps (scale trace: " + trace_string(out.gamma_trace) + ")");
      }
      const Vector offset = geometry::support_rows(S.H(), sys.W_vertices) +
                            gamma * geometry::support_rows(S.H(), c.PZ_m);
      Matrix H(S0.num_facets() + S.num_facets(), sys.n());
      H << S0.H(), S.H() * Acl;
      Vector h(H.rows());
      h << S0.h(), S.h() - offset;
      const HPolytope raw(H, h);
      if (raw.is_empty()) throw empty_error(n);
      const HPolytope Sn = geometry::remove_redundancy(raw);
      const VPolytope Sn_vertices = geometry::vertex_enum(Sn);

      const double gamma_n = geometry::min_scale_containment(Sn_vertices, c.X_m);
      if (gamma_n < gamma - options.restart_tol) {
        gamma = gamma_n;
        out.gamma_trace.push_back(gamma);
        restarted = true;
        break;
      }
      chain.push_back(Sn);
      if (geometry::contains_set(Sn, S_vertices) && geometry::contains_set(S, Sn_vertices)) {
        out.S_inf = Sn;
        out.S_inf_vertices = Sn_vertices.canonical();
        out.gamma_used = gamma;
        out.gamma_inf = gamma_n;
        out.steps = n;
        break;
      }
      S = Sn;
      S_vertices = Sn_vertices;
    }
    if (!restarted) {
      out.chain = std::move(chain);
      break;
    }
  }
  out.iterations = iterations;
  out.lambda_inf = lambda_infinity(sys, c, options.k_max);
  return out;
}

}  // namespace tube_rmpc
