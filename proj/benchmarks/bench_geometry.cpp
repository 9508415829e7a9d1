#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>

#include "common.hpp"
#include "tube_rmpc/geometry/enumeration.hpp"
#include "tube_rmpc/geometry/polytope.hpp"

using namespace tube_rmpc;
using namespace tube_rmpc::geometry;

namespace {

// Regular polygon with `n` facets.
HPolytope polygon(int n) {
  Matrix H(n, 2);
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * i / n;
    H(i, 0) = std::cos(a);
    H(i, 1) = std::sin(a);
  }
  return HPolytope(H, Vector::Ones(n));
}

void BM_VertexEnum2D(benchmark::State& state) {
  const HPolytope P = polygon(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(vertex_enum(P));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_VertexEnum2D)->RangeMultiplier(2)->Range(8, 256)->Complexity();

void BM_VertexEnum3D(benchmark::State& state) {
  const HPolytope& Z = bench::setup().chain.Z2.Z_m;
  for (auto _ : state) benchmark::DoNotOptimize(vertex_enum(Z));
}
BENCHMARK(BM_VertexEnum3D);

void BM_MinkowskiSum(benchmark::State& state) {
  const VPolytope A = vertex_enum(polygon(static_cast<int>(state.range(0))));
  const VPolytope B = vertex_enum(polygon(7)).scaled(0.3);
  for (auto _ : state) benchmark::DoNotOptimize(minkowski_sum(A, B));
}
BENCHMARK(BM_MinkowskiSum)->Arg(16)->Arg(64);

void BM_MdImage(benchmark::State& state) {
  const auto& s = bench::setup();
  for (auto _ : state) {
    benchmark::DoNotOptimize(md_image(s.sys.dP_vertices, s.chain.Z2.Z_m_vertices));
  }
}
BENCHMARK(BM_MdImage);

void BM_ContainerChain(benchmark::State& state) {
  const auto& s = bench::setup();
  WmRelaxation relax;
  relax.N_i = 2;
  for (auto _ : state) benchmark::DoNotOptimize(build_container_chain(s.sys, 5, 5, relax));
}
BENCHMARK(BM_ContainerChain)->Unit(benchmark::kMillisecond);

void BM_TerminalSet(benchmark::State& state) {
  const auto& s = bench::setup();
  for (auto _ : state) {
    benchmark::DoNotOptimize(output_admissible_set(s.sys, s.chain.Z2, 10.0));
  }
}
BENCHMARK(BM_TerminalSet)->Unit(benchmark::kMillisecond);

}  // namespace
