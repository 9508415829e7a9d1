#include <benchmark/benchmark.h>

#include "common.hpp"
#include "tube_rmpc/sim.hpp"

using namespace tube_rmpc;

namespace {

void BM_SolveStep(benchmark::State& state) {
  const ControllerData& d = bench::setup().controller;
  const Vector x = (Vector(2) << 10.0, -10.0).finished();
  for (auto _ : state) benchmark::DoNotOptimize(solve_step(d, x));
}
BENCHMARK(BM_SolveStep)->Unit(benchmark::kMicrosecond);

void BM_SolveStepInfeasible(benchmark::State& state) {
  const ControllerData& d = bench::setup().controller;
  const Vector x = (Vector(2) << 100.0, 100.0).finished();
  for (auto _ : state) benchmark::DoNotOptimize(solve_step(d, x));
}
BENCHMARK(BM_SolveStepInfeasible)->Unit(benchmark::kMicrosecond);

void BM_ClosedLoop(benchmark::State& state) {
  const auto& s = bench::setup();
  DisturbancePolicy p;
  p.seed = 1;
  p.theta = (Vector(3) << 0.8, 0.2, -0.5).finished();
  const Vector x0 = (Vector(2) << 10.0, -10.0).finished();
  for (auto _ : state) benchmark::DoNotOptimize(run_closed_loop(s.sys, s.controller, x0, 30, p));
}
BENCHMARK(BM_ClosedLoop)->Unit(benchmark::kMillisecond);

// One coarse grid without refinement: the per-cell cost of the RoA sweep.
void BM_RoaChunk(benchmark::State& state) {
  const ControllerData& d = bench::setup().controller;
  const int r = static_cast<int>(state.range(0));
  const RoaGrid grid{(Vector(2) << -70, -40).finished(), (Vector(2) << 70, 40).finished(),
                     {r, r}, false};
  for (auto _ : state) benchmark::DoNotOptimize(roa_estimate(d, grid, 1));
  state.SetItemsProcessed(state.iterations() * r * r);
}
BENCHMARK(BM_RoaChunk)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

}  // namespace
