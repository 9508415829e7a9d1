#include <doctest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "tube_rmpc/error.hpp"
#include "tube_rmpc/parallel.hpp"
#include "tube_rmpc/sim.hpp"

using namespace tube_rmpc;
using namespace tube_rmpc::geometry;

namespace {

DisturbancePolicy reference_policy(PolicyKind kind, std::uint64_t seed) {
  DisturbancePolicy p;
  p.kind = kind;
  p.seed = seed;
  p.theta = fixture::reference().theta;
  return p;
}

}  // namespace

TEST_CASE("origin stays at rest without disturbances") {
  const auto& ref = fixture::reference();
  DisturbancePolicy p;
  p.kind = PolicyKind::kZero;
  const SimulationTrace tr = run_closed_loop(ref.sys, ref.controller2, Vector::Zero(2), 10, p);
  REQUIRE(tr.steps.size() == 10);
  for (const auto& s : tr.steps) {
    CHECK(s.x.isZero());
    CHECK(std::abs(s.cost) <= 1e-20);
  }
  CHECK(tr.x_final.isZero());
}

TEST_CASE("trace replays the plant equation") {
  const auto& ref = fixture::reference();
  for (PolicyKind kind : {PolicyKind::kUniformBox, PolicyKind::kVertexRandom}) {
    const SimulationTrace tr =
        run_closed_loop(ref.sys, ref.controller2, ref.x0, 30, reference_policy(kind, 3));
    REQUIRE_FALSE(tr.infeasible_at.has_value());
    const Matrix dP = combine_basis(ref.sys.dP_basis, ref.theta);
    for (std::size_t t = 0; t < tr.steps.size(); ++t) {
      const auto& s = tr.steps[t];
      CHECK(ref.sys.W.contains(s.w));
      Vector xu(3);
      xu << s.x, s.u;
      CHECK((s.w_M - dP * xu).norm() <= 1e-15);
      const Vector next = ref.sys.A_n * s.x + ref.sys.B_n * s.u + s.w + s.w_M;
      const Vector& actual = t + 1 < tr.steps.size() ? tr.steps[t + 1].x : tr.x_final;
      CHECK((actual - next).norm() <= 1e-14);
      CHECK((ref.sys.Z.H() * xu - ref.sys.Z.h()).maxCoeff() <= 1e-9);
    }
  }
}

TEST_CASE("fixed sequences repeat their last entry") {
  const auto& ref = fixture::reference();
  DisturbancePolicy p;
  p.kind = PolicyKind::kFixedSequence;
  p.sequence = {(Vector(2) << 0.1, 0.0).finished(), (Vector(2) << -0.05, 0.02).finished()};
  const SimulationTrace tr = run_closed_loop(ref.sys, ref.controller2, ref.x0, 5, p);
  CHECK(tr.steps[0].w == p.sequence[0]);
  for (int t = 1; t < 5; ++t) CHECK(tr.steps[t].w == p.sequence[1]);
  CHECK(tr.steps[0].w_M.isZero());

  p.sequence.clear();
  CHECK_THROWS_AS(run_closed_loop(ref.sys, ref.controller2, ref.x0, 5, p), Error);
  DisturbancePolicy wild = reference_policy(PolicyKind::kUniformBox, 1);
  wild.theta(0) = 1.5;
  CHECK_THROWS_AS(run_closed_loop(ref.sys, ref.controller2, ref.x0, 5, wild), Error);
}

TEST_CASE("policy names") {
  for (PolicyKind k : {PolicyKind::kUniformBox, PolicyKind::kVertexRandom,
                       PolicyKind::kFixedSequence, PolicyKind::kZero}) {
    CHECK(policy_from_string(to_string(k)) == k);
  }
  CHECK_THROWS(policy_from_string("gaussian"));
}

TEST_CASE("infeasible start ends the run at t = 0") {
  const auto& ref = fixture::reference();
  const SimulationTrace tr = run_closed_loop(ref.sys, ref.controller2,
                                             (Vector(2) << 69, 39).finished(), 5,
                                             reference_policy(PolicyKind::kUniformBox, 1));
  REQUIRE(tr.infeasible_at.has_value());
  CHECK(*tr.infeasible_at == 0);
  CHECK_THROWS_AS(tube_snapshots(ref.controller2, (Vector(2) << 69, 39).finished(), {1}), Error);
}

TEST_CASE("realized states stay inside the predicted tubes") {
  const auto& ref = fixture::reference();
  const ControllerData& d = ref.controller2;
  const std::vector<int> ks = {0, 1, 2, 3, 6};
  const auto tubes = tube_snapshots(d, ref.x0, ks);
  REQUIRE(tubes.size() == ks.size());
  CHECK(tubes[0].canonical().num_vertices() == 1);
  CHECK((tubes[0].vertices().col(0) - ref.x0).norm() <= 1e-12);

  std::vector<HPolytope> H;
  for (std::size_t i = 1; i < tubes.size(); ++i) H.push_back(facet_enum(tubes[i]));
  const ControlResult plan = solve_step(d, ref.x0);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uw(-0.1, 0.1), ut(-1.0, 1.0);
  int outside = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Vector x = ref.x0;
    for (int k = 0; k < ks.back(); ++k) {
      const Vector u = d.K * x + plan.v.segment(k, 1);
      Vector xu(3);
      xu << x, u;
      const Vector theta = (Vector(3) << ut(rng), ut(rng), ut(rng)).finished();
      const Vector w = (Vector(2) << uw(rng), uw(rng)).finished();
      x = d.A_n * x + d.B_n * u + w + combine_basis(ref.sys.dP_basis, theta) * xu;
      for (std::size_t i = 1; i < ks.size(); ++i) {
        if (ks[i] == k + 1) outside += !H[i - 1].contains(x, 1e-9);
      }
    }
  }
  CHECK(outside == 0);
}

TEST_CASE("region of attraction grids") {
  const auto& ref = fixture::reference();
  // A small box around the origin lies inside the terminal set.
  const RoaGrid inner{Vector::Constant(2, -0.5), Vector::Constant(2, 0.5), {10, 10}, true};
  const RoaResult all = roa_estimate(ref.controller2, inner, 1);
  CHECK(all.feasible_cells == 100);
  CHECK(all.area == doctest::Approx(1.0));

  const RoaGrid coarse{(Vector(2) << -70, -40).finished(), (Vector(2) << 70, 40).finished(),
                       {40, 40}, false};
  const RoaResult r0 = roa_estimate(ref.controller0, coarse, 2);
  const RoaResult r2 = roa_estimate(ref.controller2, coarse, 1);
  const RoaResult r2b = roa_estimate(ref.controller2, coarse, 3);
  REQUIRE(r0.cells.size() == r2.cells.size());
  int not_nested = 0, differs = 0;
  for (std::size_t i = 0; i < r0.cells.size(); ++i) {
    not_nested += r0.cells[i].feasible && !r2.cells[i].feasible;
    differs += r2.cells[i].feasible != r2b.cells[i].feasible;
  }
  CHECK(not_nested == 0);
  CHECK(differs == 0);
  CHECK(r0.area < r2.area);

  const RoaGrid refined{coarse.lo, coarse.hi, {40, 40}, true};
  const RoaResult rr = roa_estimate(ref.controller2, refined, 2);
  CHECK(rr.refined_cells > 0);
  CHECK(rr.area == doctest::Approx(r2.area).epsilon(0.05));
}

TEST_CASE("parallel loop") {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(1000, 4, [&](int begin, int end, int) {
    for (int i = begin; i < end; ++i) hits[i]++;
  });
  bool once = true;
  for (auto& h : hits) once = once && h.load() == 1;
  CHECK(once);
  CHECK_THROWS_AS(parallel_for(10, 3,
                               [](int begin, int, int) {
                                 if (begin == 0) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
  setenv("TUBE_RMPC_THREADS", "3", 1);
  CHECK(worker_count() == 3);
  unsetenv("TUBE_RMPC_THREADS");
  CHECK(worker_count() >= 1);
}
