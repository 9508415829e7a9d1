#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "tube_rmpc/controller.hpp"
#include "tube_rmpc/model.hpp"

namespace tube_rmpc {

enum class PolicyKind { kUniformBox, kVertexRandom, kFixedSequence, kZero };

std::string_view to_string(PolicyKind kind);
PolicyKind policy_from_string(std::string_view name);

// How w(t) and ΔP(t) are drawn. theta holds basis coefficients when the
// system carries a basis, and convex weights over the uncertainty vertices
// otherwise. An empty theta means ΔP = 0.
struct DisturbancePolicy {
  PolicyKind kind = PolicyKind::kUniformBox;
  std::uint64_t seed = 0;
  Vector theta;
  // Draw a fresh admissible theta at every step instead of holding it.
  bool theta_walk = false;
  // Used by kFixedSequence; the last entry repeats.
  std::vector<Vector> sequence;
};

struct SimulationStep {
  int t = 0;
  Vector x;
  Vector u;
  Vector v;
  Vector lambda;
  double cost = 0.0;
  bool feasible = false;
  Vector w;
  Vector w_M;
  // Largest row violation of the shifted candidate at this step (t ≥ 1).
  std::optional<double> candidate_violation;
};

struct SimulationTrace {
  std::vector<SimulationStep> steps;
  Vector x_final;
  // Set when the online problem became infeasible at that step.
  std::optional<int> infeasible_at;
};

// Runs T steps of solve → u = Kx + v*(0) → x⁺ = A_n x + B_n u + w + w_M.
SimulationTrace run_closed_loop(const UncertainSystem& sys, const ControllerData& data,
                                const Vector& x0, int T, const DisturbancePolicy& policy,
                                const geometry::QpSolver& qp = geometry::default_qp_solver());

// x̄*(k|0) ⊕ Ē(k|0) for each requested k, from the optimal solve at x0.
// Throws kInfeasibleAt when x0 is outside the region of attraction.
std::vector<geometry::VPolytope> tube_snapshots(const ControllerData& data,
                                                const Vector& x0,
                                                const std::vector<int>& k_list);

struct RoaGrid {
  Vector lo;
  Vector hi;
  std::vector<int> resolution;  // cells per axis
  bool refine = true;
};

struct RoaCell {
  Vector center;
  Vector width;
  bool feasible = false;
};

struct RoaResult {
  std::vector<RoaCell> cells;
  double area = 0.0;  // measure of the feasible cells
  int feasible_cells = 0;
  int refined_cells = 0;
  int solves = 0;
};

// Feasibility of the online problem at every cell center. With refine set,
// cells with a differently classified axis neighbour are split in half along
// every axis and their sub-cells classified instead.
RoaResult roa_estimate(const ControllerData& data, const RoaGrid& grid, int workers = 0);

}  // namespace tube_rmpc
