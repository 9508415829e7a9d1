// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit status
// when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "tube_rmpc/cli/pipeline.hpp"
#include "tube_rmpc/geometry/io.hpp"
#include "tube_rmpc/sim.hpp"

namespace {

using namespace tube_rmpc;
using geometry::HPolytope;
using geometry::VPolytope;

// Published reference values and the tolerances they are checked against.
constexpr double kVolumeZ0 = 1.3333, kVolumeZ1 = 1.9437, kVolumeZ2 = 4.2421;
constexpr double kVolumeTolZ01 = 0.02, kVolumeTolZ2 = 0.05;
constexpr double kAreaPZ0 = 0.0046, kAreaPZ2 = 0.0097, kAreaTol = 0.05;
constexpr int kPublishedVariables = 20, kPublishedInequalities = 308;
constexpr double kRoaZ0 = 2703.3, kRoaZ1 = 2891.3, kRoaZ2 = 3887.3;
constexpr double kRoaTolZ01 = 0.03, kRoaTolZ2 = 0.05;
constexpr double kCostDecreaseTol = 1e-6;
constexpr double kConstraintTol = 1e-9;
constexpr double kCandidateTol = 1e-7;
constexpr double kSetTol = 1e-8;
constexpr double kContainerSeconds = 10.0, kSimulationSeconds = 5.0, kRoaSeconds = 600.0;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

double rel_err(double value, double ref) { return std::abs(value - ref) / std::abs(ref); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

cli::RunConfig reference_run_config() {
  return cli::parse_config(fixture::reference_config(), fixture::data_dir());
}

nlohmann::json run_stage(cli::Stage stage) {
  cli::PipelineOptions options;
  options.stage = stage;
  options.write_artifacts = false;
  const auto result = cli::run_pipeline(reference_run_config(), options);
  if (result.exit_code != cli::kExitOk) {
    throw std::runtime_error("pipeline exit " + std::to_string(result.exit_code) + ": " +
                             result.report.value("error", nlohmann::json()).dump());
  }
  return result.report;
}

// ---------------------------------------------------------------------------

void criterion_volumes(Outcome& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto report = run_stage(cli::Stage::kContainer);
  const double secs = seconds_since(t0);
  const auto& vol = report["container"]["volumes"];
  const double v0 = vol["Z0"], v1 = vol["Z1"], v2 = vol["Z2"];
  out.detail << "Z0 " << v0 << " (" << 100 * rel_err(v0, kVolumeZ0) << "%), Z1 " << v1 << " ("
             << 100 * rel_err(v1, kVolumeZ1) << "%), Z2 " << v2 << " ("
             << 100 * rel_err(v2, kVolumeZ2) << "%), " << secs << " s ";
  out.require(rel_err(v0, kVolumeZ0) <= kVolumeTolZ01, "Z0 volume");
  out.require(rel_err(v1, kVolumeZ1) <= kVolumeTolZ01, "Z1 volume");
  out.require(rel_err(v2, kVolumeZ2) <= kVolumeTolZ2, "Z2 volume");
  out.require(secs < kContainerSeconds, "runtime");
}

void criterion_md_areas(Outcome& out) {
  const auto report = run_stage(cli::Stage::kContainer);
  const double a0 = report["container"]["md_image_areas"]["Z0"];
  const double a2 = report["container"]["md_image_areas"]["Z2"];
  out.detail << "PZ0 " << a0 << " (" << 100 * rel_err(a0, kAreaPZ0) << "%), PZ2 " << a2 << " ("
             << 100 * rel_err(a2, kAreaPZ2) << "%), ratio " << a2 / a0 << ' ';
  out.require(rel_err(a0, kAreaPZ0) <= kAreaTol, "PZ0 area");
  out.require(rel_err(a2, kAreaPZ2) <= kAreaTol, "PZ2 area");
  out.require(a2 / a0 > 2.0, "area ratio");
}

void criterion_qp_size(Outcome& out) {
  const auto report = run_stage(cli::Stage::kPrepare);
  const auto& c = report["controller"];
  const int N = c["N"], vars = c["variables"], rows = c["inequalities"];
  const int lzm = c["lcon"]["Z_m"], lz = c["lcon"]["Z"], ls = c["lcon"]["S_inf"];
  const int formula = N * (lzm + lz) + ls + N;
  out.detail << "variables " << vars << ", inequalities " << rows << " = " << N << "*(" << lzm
             << "+" << lz << ")+" << ls << "+" << N << ' ';
  out.require(vars == kPublishedVariables, "variable count");
  const int m = fixture::reference().sys.m();
  out.require(vars == N * m + N, "variable formula");
  out.require(rows == formula, "inequality formula");
  if (rows != kPublishedInequalities) {
    out.detail << "(published " << kPublishedInequalities
               << "; facet counts differ, formula-level match asserted) ";
  }
}

// Closed-loop run shared by criteria 4 and 6.
struct ReferenceRun {
  SimulationTrace trace;
  double seconds = 0.0;
};

const ReferenceRun& reference_run() {
  static const ReferenceRun run = [] {
    const auto& ref = fixture::reference();
    DisturbancePolicy policy;
    policy.kind = PolicyKind::kUniformBox;
    policy.seed = 1;
    policy.theta = ref.theta;
    ReferenceRun r;
    const auto t0 = std::chrono::steady_clock::now();
    r.trace = run_closed_loop(ref.sys, ref.controller2, ref.x0, 30, policy);
    r.seconds = seconds_since(t0);
    return r;
  }();
  return run;
}

void criterion_closed_loop(Outcome& out) {
  const auto& ref = fixture::reference();
  const auto& d = ref.controller2;
  const ReferenceRun& run = reference_run();
  const auto& steps = run.trace.steps;
  out.require(!run.trace.infeasible_at && steps.size() == 30, "all 30 steps feasible");

  double worst_violation = -1e300, worst_decrease = -1e300;
  for (std::size_t t = 0; t < steps.size(); ++t) {
    Vector xu(3);
    xu << steps[t].x, steps[t].u;
    worst_violation = std::max(worst_violation, (ref.sys.Z.H() * xu - ref.sys.Z.h()).maxCoeff());
    if (t + 1 < steps.size()) {
      const Vector v0 = steps[t].v.head(1);
      worst_decrease =
          std::max(worst_decrease, steps[t + 1].cost - steps[t].cost + v0.dot(d.psi * v0));
    }
  }
  out.require(worst_violation <= kConstraintTol, "state/input constraints");
  out.require(worst_decrease <= kCostDecreaseTol, "cost decrease");

  // Truncated minimal disturbance invariant set Σ_{i<k} A_cl^i (W ⊕ λ∞ PZ_m).
  const int k_max = 30;
  const VPolytope per_step =
      geometry::minkowski_sum(ref.sys.W_vertices, ref.chain.Z2.PZ_m.scaled(d.lambda_inf));
  const HPolytope F = geometry::facet_enum(oracle::explicit_power_sum(d.A_cl, per_step, k_max));
  const double margin = ref.terminal2.lambda_inf.residual;
  const double excess = (F.H() * run.trace.x_final - F.h()).maxCoeff();
  out.require(excess <= margin, "final state inside invariant bound");
  out.require(run.seconds < kSimulationSeconds, "runtime");
  out.detail << "max constraint slack " << worst_violation << ", max cost-decrease residual "
             << worst_decrease << ", |x_T| " << run.trace.x_final.norm()
             << ", bound excess " << excess << " (margin " << margin << "), " << run.seconds
             << " s ";
}

void criterion_roa(Outcome& out) {
  const auto report = run_stage(cli::Stage::kRoa);
  const auto& r = report["roa"]["containers"];
  const double a0 = r["Z0"]["area"], a1 = r["Z1"]["area"], a2 = r["Z2"]["area"];
  const double worst_secs = std::max({r["Z0"]["seconds"].get<double>(),
                                      r["Z1"]["seconds"].get<double>(),
                                      r["Z2"]["seconds"].get<double>()});
  out.detail << "Z0 " << a0 << " (" << 100 * rel_err(a0, kRoaZ0) << "%), Z1 " << a1 << " ("
             << 100 * rel_err(a1, kRoaZ1) << "%), Z2 " << a2 << " ("
             << 100 * rel_err(a2, kRoaZ2) << "%), slowest grid " << worst_secs << " s ";
  out.require(report["roa"]["resolution"] == nlohmann::json({200, 200}), "200x200 grid");
  out.require(rel_err(a0, kRoaZ0) <= kRoaTolZ01, "Z0 area");
  out.require(rel_err(a1, kRoaZ1) <= kRoaTolZ01, "Z1 area");
  out.require(rel_err(a2, kRoaZ2) <= kRoaTolZ2, "Z2 area");
  out.require(a0 < a1 && a1 < a2, "ordering");
  out.require(worst_secs < kRoaSeconds, "runtime");
}

// ---- criterion 6 -----------------------------------------------------------

int set_identity_failures(int instances, std::mt19937_64& rng) {
  const Tolerances tol{kSetTol, kDefaultTolerances.vertex_dedup};
  int failures = 0;
  for (int i = 0; i < instances; ++i) {
    const int dim = i % 2 == 0 ? 2 : 3;
    const VPolytope Av = oracle::random_polytope(rng, dim, 8 + dim * 2);
    const VPolytope Bv = oracle::random_polytope(rng, dim, 6).scaled(0.25);
    const VPolytope Cv = oracle::random_polytope(rng, dim, 6).scaled(0.2);
    const HPolytope A = geometry::facet_enum(Av);
    const HPolytope B = geometry::facet_enum(Bv);

    // (A ⊕ B) ⊖ B = A
    const HPolytope sum = geometry::facet_enum(geometry::minkowski_sum(Av, Bv));
    failures += !geometry::set_equal(geometry::pontryagin_diff(sum, Bv), A, tol);

    // (A ⊖ B) ⊕ B ⊆ A
    const HPolytope diff = geometry::pontryagin_diff(A, Bv);
    const VPolytope back = geometry::minkowski_sum(geometry::vertex_enum(diff), Bv);
    failures += !geometry::contains_set(A, back, tol);

    // A ⊖ B ⊖ C = A ⊖ C ⊖ B
    failures += !geometry::set_equal(geometry::pontryagin_diff(diff, Cv),
                                     geometry::pontryagin_diff(geometry::pontryagin_diff(A, Cv), Bv),
                                     tol);

    // T(A ⊕ B) = TA ⊕ TB
    Matrix T = Matrix::Random(dim, dim);
    T.diagonal().array() += 2.0;
    failures += !geometry::set_equal(
        geometry::linear_map(T, geometry::minkowski_sum(Av, Bv)),
        geometry::minkowski_sum(geometry::linear_map(T, Av), geometry::linear_map(T, Bv)), tol);

    // (A ∩ B') ⊖ C = (A ⊖ C) ∩ (B' ⊖ C), B' a shifted copy overlapping A
    const HPolytope B2 = geometry::facet_enum(oracle::random_polytope(rng, dim, 8));
    failures += !geometry::set_equal(
        geometry::pontryagin_diff(geometry::intersect(A, B2), Cv),
        geometry::intersect(geometry::pontryagin_diff(A, Cv), geometry::pontryagin_diff(B2, Cv)),
        tol);
  }
  return failures;
}

int md_image_sampling_failures(int draws, std::mt19937_64& rng) {
  const auto& ref = fixture::reference();
  int failures = 0;
  const Container* containers[] = {&ref.chain.Z0, &ref.chain.Z1, &ref.chain.Z2};
  for (int i = 0; i < draws; ++i) {
    const Container& c = *containers[i % 3];
    const HPolytope image = geometry::facet_enum(c.PZ_m);
    Vector weights(ref.sys.dP_vertices.size());
    std::exponential_distribution<double> expo(1.0);
    for (int k = 0; k < weights.size(); ++k) weights(k) = expo(rng);
    weights /= weights.sum();
    Matrix dP = Matrix::Zero(2, 3);
    for (int k = 0; k < weights.size(); ++k) dP += weights(k) * ref.sys.dP_vertices[k];
    const Vector z = oracle::random_convex_point(rng, c.Z_m_vertices.vertices());
    failures += !image.contains(dP * z, kSetTol);
  }
  return failures;
}

int nesting_failures(const TerminalSet& T) {
  int failures = 0;
  for (std::size_t n = 0; n + 1 < T.chain.size(); ++n) {
    failures += !geometry::contains_set(T.chain[n], geometry::vertex_enum(T.chain[n + 1]));
  }
  failures += !geometry::contains_set(T.chain.front(), T.S_inf_vertices);
  return failures;
}

void criterion_properties(Outcome& out) {
  std::mt19937_64 rng(20240601);

  const int identity_instances = 200;
  const int identity_failures = set_identity_failures(identity_instances, rng);
  out.detail << "set identities " << 5 * identity_instances - identity_failures << "/"
             << 5 * identity_instances;
  out.require(identity_failures == 0, "set identities");

  const int md_failures = md_image_sampling_failures(500, rng);
  out.detail << ", MD-image sampling violations " << md_failures << "/500";
  out.require(md_failures == 0, "MD-image sampling");

  const auto& ref = fixture::reference();
  const int nest = nesting_failures(ref.terminal0) + nesting_failures(ref.terminal2);
  out.detail << ", nesting failures " << nest << " over " << ref.terminal0.chain.size() +
                                                              ref.terminal2.chain.size()
             << " sets";
  out.require(nest == 0, "terminal recursion nesting");

  // Recursive feasibility of the shifted candidate over seeded runs.
  const int runs = 100;
  int infeasible_runs = 0, candidate_checks = 0;
  double worst_candidate = 0.0;
  for (int s = 0; s < runs; ++s) {
    DisturbancePolicy policy;
    policy.kind = s % 2 == 0 ? PolicyKind::kUniformBox : PolicyKind::kVertexRandom;
    policy.seed = 1000 + s;
    policy.theta = ref.theta;
    policy.theta_walk = s % 4 >= 2;
    const auto trace = run_closed_loop(ref.sys, ref.controller2, ref.x0, 30, policy);
    infeasible_runs += trace.infeasible_at.has_value();
    for (const auto& step : trace.steps) {
      if (step.candidate_violation) {
        ++candidate_checks;
        worst_candidate = std::max(worst_candidate, *step.candidate_violation);
      }
    }
  }
  out.detail << ", shifted candidate: " << candidate_checks << " checks in " << runs
             << " runs, worst violation " << worst_candidate << ", infeasible runs "
             << infeasible_runs;
  out.require(infeasible_runs == 0 && worst_candidate <= kCandidateTol,
              "shifted-candidate feasibility");

  // λ† substitution on every solve of the reference run.
  const auto& d = ref.controller2;
  int substitution_failures = 0;
  double worst_sub = 0.0;
  for (const auto& step : reference_run().trace.steps) {
    const Vector lam = lambda_tighten(step.v, d, step.x);
    Vector z(step.v.size() + lam.size());
    z << step.v, lam;
    const double viol = max_violation(d, step.x, z);
    worst_sub = std::max(worst_sub, viol);
    double cost = 0.0;
    for (int k = 0; k < d.N; ++k) {
      const auto vk = step.v.segment(k * d.m, d.m);
      cost += vk.dot(d.psi * vk);
    }
    const bool ok = viol <= kCandidateTol && (lam.array() <= step.lambda.array() + 1e-9).all() &&
                    cost == step.cost;
    substitution_failures += !ok;
  }
  out.detail << ", lambda-tightening failures " << substitution_failures << "/"
             << reference_run().trace.steps.size() << " (worst violation " << worst_sub << ") ";
  out.require(substitution_failures == 0, "lambda tightening");
}

// ---- criterion 7 -----------------------------------------------------------

// N-step controllable interval to `target` for x⁺ = a x + b u, a, b > 0,
// |x| ≤ x_max, |u| ≤ u_max.
std::pair<double, double> controllable_interval(double a, double b, double x_max, double u_max,
                                                std::pair<double, double> target, int N) {
  auto [lo, hi] = target;
  for (int j = 0; j < N; ++j) {
    const double new_lo = std::max(-x_max, (lo - b * u_max) / a);
    const double new_hi = std::min(x_max, (hi + b * u_max) / a);
    lo = new_lo;
    hi = new_hi;
  }
  return {lo, hi};
}

void criterion_degenerate(Outcome& out) {
  const double a = 1.2, b = 1.0, k = -0.7, x_max = 10.0, u_max = 1.0;
  const UncertainSystem sys = fixture::scalar_nominal(a, b, k, x_max, u_max);
  const Container c = make_container(sys, default_container(1, 1));
  const GammaBounds bounds = gamma_bounds(sys, c);
  const TerminalSet T = output_admissible_set(sys, c, bounds.gamma_bar1);

  // Terminal set against the classical maximal invariant set.
  const Matrix Hxu = sys.Z.H() * sys.Pi();
  const auto mpi = oracle::classical_mpi(sys.A_cl(), Hxu, sys.Z.h());
  const double s_lo = mpi.vertices.minCoeff(), s_hi = mpi.vertices.maxCoeff();
  out.require(oracle::same_point_sets(mpi.vertices, T.S_inf_vertices.vertices()),
              "terminal set equals classical invariant set");
  out.require(T.lambda_inf.value == 0.0, "lambda_inf = 0");

  int cells = 0, mismatches = 0;
  double closest = 1e300;
  for (int N : {1, 4, 10}) {
    const ControllerData d = offline_prepare(sys, c, T, N, Matrix::Identity(1, 1));
    bool offsets_zero = true;
    for (const auto* table : {&d.dZm_w, &d.dZ_w, &d.dS_w, &d.dZm_md, &d.dZ_md, &d.dS_md}) {
      for (const auto& v : *table) offsets_zero = offsets_zero && v.cwiseAbs().maxCoeff() == 0.0;
    }
    out.require(offsets_zero, "all tightening offsets vanish");

    const auto [lo, hi] = controllable_interval(a, b, x_max, u_max, {s_lo, s_hi}, N);
    RoaGrid grid{(Vector(1) << -12.0).finished(), (Vector(1) << 12.0).finished(), {240}, false};
    const RoaResult roa = roa_estimate(d, grid, 1);
    for (const RoaCell& cell : roa.cells) {
      const double x = cell.center(0);
      const bool inside = lo <= x && x <= hi;
      closest = std::min({closest, std::abs(x - lo), std::abs(x - hi)});
      ++cells;
      mismatches += inside != cell.feasible;
    }
    out.detail << "N=" << N << " interval [" << lo << ", " << hi << "] ";
  }
  out.detail << "cells " << cells << ", mismatches " << mismatches
             << ", closest center to a boundary " << closest << ' ';
  out.require(mismatches == 0, "exact cell agreement");
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<void(Outcome&)> run;
  };
  const Criterion criteria[] = {
      {1, "container volumes", criterion_volumes},
      {2, "MD-image areas", criterion_md_areas},
      {3, "QP sizing", criterion_qp_size},
      {4, "closed-loop run", criterion_closed_loop},
      {5, "region of attraction", criterion_roa},
      {6, "property suite", criterion_properties},
      {7, "degenerate nominal case", criterion_degenerate},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome out;
    try {
      c.run(out);
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail << "[exception: " << e.what() << "]";
    }
    failed += !out.pass;
    std::printf("criterion %d %s: %s -- %s\n", c.id, c.name, out.pass ? "PASS" : "FAIL",
                out.detail.str().c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
