#include "tube_rmpc/sim.hpp"

#include <random>

#include "tube_rmpc/error.hpp"
#include "tube_rmpc/parallel.hpp"

namespace tube_rmpc {

using geometry::VPolytope;

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kUniformBox: return "uniform";
    case PolicyKind::kVertexRandom: return "vertex_random";
    case PolicyKind::kFixedSequence: return "fixed";
    case PolicyKind::kZero: return "zero";
  }
  return "unknown";
}

PolicyKind policy_from_string(std::string_view name) {
  if (name == "uniform") return PolicyKind::kUniformBox;
  if (name == "vertex_random") return PolicyKind::kVertexRandom;
  if (name == "fixed") return PolicyKind::kFixedSequence;
  if (name == "zero") return PolicyKind::kZero;
  throw Error(ErrorCode::kInvalidArgument, "unknown disturbance policy " + std::string(name));
}

namespace {

class DisturbanceSource {
 public:
  DisturbanceSource(const UncertainSystem& sys, const DisturbancePolicy& policy)
      : sys_(sys), policy_(policy), rng_(policy.seed), theta_(policy.theta) {
    const Matrix& V = sys.W_vertices.vertices();
    lo_ = V.rowwise().minCoeff();
    hi_ = V.rowwise().maxCoeff();
    if (policy.kind == PolicyKind::kFixedSequence && policy.sequence.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "fixed policy needs a sequence");
    }
    check_theta(theta_);
  }

  Vector next_w(int t) {
    const int n = sys_.n();
    switch (policy_.kind) {
      case PolicyKind::kZero: return Vector::Zero(n);
      case PolicyKind::kFixedSequence: {
        const auto idx = std::min<std::size_t>(t, policy_.sequence.size() - 1);
        const Vector& w = policy_.sequence[idx];
        if (w.size() != n || !sys_.W.contains(w)) {
          throw Error(ErrorCode::kInvalidArgument, "fixed disturbance outside W");
        }
        return w;
      }
      case PolicyKind::kVertexRandom: {
        std::uniform_int_distribution<int> pick(0, sys_.W_vertices.num_vertices() - 1);
        return sys_.W_vertices.vertices().col(pick(rng_));
      }
      case PolicyKind::kUniformBox: {
        for (int attempt = 0; attempt < 10000; ++attempt) {
          Vector w(n);
          for (int i = 0; i < n; ++i) {
            w(i) = std::uniform_real_distribution<double>(lo_(i), hi_(i))(rng_);
          }
          if (sys_.W.contains(w, 0.0)) return w;
        }
        throw Error(ErrorCode::kSolverFailure, "rejection sampling of W failed");
      }
    }
    return Vector::Zero(n);
  }

  // ΔP in force at this step.
  Matrix next_dP() {
    if (policy_.theta_walk) theta_ = draw_theta();
    if (theta_.size() == 0) return Matrix::Zero(sys_.n(), sys_.n() + sys_.m());
    if (!sys_.dP_basis.empty()) return combine_basis(sys_.dP_basis, theta_);
    Matrix M = Matrix::Zero(sys_.n(), sys_.n() + sys_.m());
    for (int i = 0; i < theta_.size(); ++i) M += theta_(i) * sys_.dP_vertices[i];
    return M;
  }

 private:
  void check_theta(const Vector& theta) const {
    if (theta.size() == 0) return;
    if (!sys_.dP_basis.empty()) {
      if (theta.size() != static_cast<int>(sys_.dP_basis.size()) ||
          theta.cwiseAbs().maxCoeff() > sys_.theta_box + 1e-12) {
        throw Error(ErrorCode::kInvalidArgument, "theta outside the admissible box");
      }
    } else if (theta.size() != static_cast<int>(sys_.dP_vertices.size()) ||
               theta.minCoeff() < 0.0 || std::abs(theta.sum() - 1.0) > 1e-12) {
      throw Error(ErrorCode::kInvalidArgument, "theta must be convex weights");
    }
  }

  Vector draw_theta() {
    if (!sys_.dP_basis.empty()) {
      Vector th(static_cast<Eigen::Index>(sys_.dP_basis.size()));
      std::uniform_real_distribution<double> u(-sys_.theta_box, sys_.theta_box);
      for (int i = 0; i < th.size(); ++i) th(i) = u(rng_);
      return th;
    }
    Vector th(static_cast<Eigen::Index>(sys_.dP_vertices.size()));
    std::exponential_distribution<double> e(1.0);
    for (int i = 0; i < th.size(); ++i) th(i) = e(rng_);
    return th / th.sum();
  }

  const UncertainSystem& sys_;
  const DisturbancePolicy& policy_;
  std::mt19937_64 rng_;
  Vector theta_;
  Vector lo_, hi_;
};

}  // namespace

SimulationTrace run_closed_loop(const UncertainSystem& sys, const ControllerData& data,
                                const Vector& x0, int T, const DisturbancePolicy& policy,
                                const geometry::QpSolver& qp) {
  if (x0.size() != sys.n()) throw Error(ErrorCode::kDimensionMismatch, "initial state");
  if (T < 0) throw Error(ErrorCode::kInvalidArgument, "negative horizon");
  DisturbanceSource source(sys, policy);
  SimulationTrace trace;
  Vector x = x0;
  std::optional<Vector> candidate;
  for (int t = 0; t < T; ++t) {
    const ControlResult res = solve_step(data, x, candidate, qp);
    SimulationStep step;
    step.t = t;
    step.x = x;
    step.candidate_violation = res.candidate_violation;
    step.feasible = res.optimal();
    if (!step.feasible) {
      trace.steps.push_back(std::move(step));
      trace.infeasible_at = t;
      trace.x_final = x;
      return trace;
    }
    step.u = res.u;
    step.v = res.v;
    step.lambda = res.lambda;
    step.cost = res.cost;
    step.w = source.next_w(t);
    Vector xu(sys.n() + sys.m());
    xu << x, res.u;
    step.w_M = source.next_dP() * xu;
    x = sys.A_n * x + sys.B_n * res.u + step.w + step.w_M;
    candidate = shifted_candidate(res, data);
    trace.steps.push_back(std::move(step));
  }
  trace.x_final = x;
  return trace;
}

std::vector<VPolytope> tube_snapshots(const ControllerData& data, const Vector& x0,
                                      const std::vector<int>& k_list) {
  const ControlResult res = solve_step(data, x0);
  if (!res.optimal()) {
    throw Error(ErrorCode::kInfeasibleAt, "t = 0: initial state outside the region of attraction");
  }
  const Matrix xs = predict_nominal(data, x0, res.v);
  std::vector<VPolytope> out;
  for (int k : k_list) {
    if (k < 0 || k > data.N) throw Error(ErrorCode::kInvalidArgument, "snapshot index");
    VPolytope E = VPolytope::point(Vector::Zero(data.n));
    for (int i = 0; i < k; ++i) {
      E = geometry::minkowski_sum(E, geometry::linear_map(data.powers[i], data.W));
      E = geometry::minkowski_sum(
          E, geometry::linear_map(res.lambda(k - 1 - i) * data.powers[i], data.PZ_m));
    }
    out.push_back(E.translated(xs.col(k)));
  }
  return out;
}

RoaResult roa_estimate(const ControllerData& data, const RoaGrid& grid, int workers) {
  const int d = data.n;
  if (grid.lo.size() != d || grid.hi.size() != d ||
      static_cast<int>(grid.resolution.size()) != d) {
    throw Error(ErrorCode::kDimensionMismatch, "grid dimension must match the state");
  }
  if (workers <= 0) workers = worker_count();
  Vector width(d);
  long total = 1;
  for (int i = 0; i < d; ++i) {
    if (grid.resolution[i] < 1 || !(grid.hi(i) > grid.lo(i))) {
      throw Error(ErrorCode::kInvalidArgument, "degenerate grid axis");
    }
    width(i) = (grid.hi(i) - grid.lo(i)) / grid.resolution[i];
    total *= grid.resolution[i];
  }

  auto classify = [&](const std::vector<Vector>& centers) {
    std::vector<char> feasible(centers.size(), 0);
    parallel_for(static_cast<int>(centers.size()), workers, [&](int begin, int end, int) {
      const geometry::DualActiveSetQpSolver solver;
      for (int i = begin; i < end; ++i) {
        feasible[i] = solve_step(data, centers[i], std::nullopt, solver).optimal();
      }
    });
    return feasible;
  };

  std::vector<Vector> centers(total);
  std::vector<std::vector<int>> index(total, std::vector<int>(d));
  for (long c = 0; c < total; ++c) {
    long rest = c;
    Vector x(d);
    for (int i = 0; i < d; ++i) {
      index[c][i] = static_cast<int>(rest % grid.resolution[i]);
      rest /= grid.resolution[i];
      x(i) = grid.lo(i) + (index[c][i] + 0.5) * width(i);
    }
    centers[c] = x;
  }
  const std::vector<char> coarse = classify(centers);

  RoaResult out;
  out.solves = static_cast<int>(total);
  auto flat = [&](const std::vector<int>& idx) {
    long c = 0;
    for (int i = d - 1; i >= 0; --i) c = c * grid.resolution[i] + idx[i];
    return c;
  };
  std::vector<long> boundary;
  for (long c = 0; c < total; ++c) {
    bool on_boundary = false;
    if (grid.refine) {
      for (int i = 0; i < d && !on_boundary; ++i) {
        for (int s : {-1, 1}) {
          std::vector<int> nb = index[c];
          nb[i] += s;
          if (nb[i] < 0 || nb[i] >= grid.resolution[i]) continue;
          if (coarse[flat(nb)] != coarse[c]) {
            on_boundary = true;
            break;
          }
        }
      }
    }
    if (on_boundary) {
      boundary.push_back(c);
    } else {
      out.cells.push_back({centers[c], width, coarse[c] != 0});
    }
  }

  if (!boundary.empty()) {
    const int sub = 1 << d;
    std::vector<Vector> fine;
    fine.reserve(boundary.size() * sub);
    for (long c : boundary) {
      for (int s = 0; s < sub; ++s) {
        Vector x = centers[c];
        for (int i = 0; i < d; ++i) x(i) += ((s >> i) & 1 ? 0.25 : -0.25) * width(i);
        fine.push_back(x);
      }
    }
    const std::vector<char> refined = classify(fine);
    for (std::size_t k = 0; k < fine.size(); ++k) {
      out.cells.push_back({fine[k], 0.5 * width, refined[k] != 0});
    }
    out.refined_cells = static_cast<int>(boundary.size());
    out.solves += static_cast<int>(fine.size());
  }

  for (const RoaCell& cell : out.cells) {
    if (!cell.feasible) continue;
    ++out.feasible_cells;
    out.area += cell.width.prod();
  }
  return out;
}

}  // namespace tube_rmpc
