#pragma once

#include <optional>
#include <vector>

#include "tube_rmpc/geometry/polytope.hpp"
#include "tube_rmpc/model.hpp"

namespace tube_rmpc {

// A container shape Z_m ⊂ ℝ^{n+m} with the sets derived from it.
struct Container {
  geometry::HPolytope Z_m;
  geometry::VPolytope Z_m_vertices;
  // {x | [x; Kx] ∈ Z_m}
  geometry::HPolytope X_m;
  // Image of Z_m under every admissible ΔP.
  geometry::VPolytope PZ_m;
};

Container make_container(const UncertainSystem& sys, const geometry::HPolytope& Z_m);
Container make_container(const UncertainSystem& sys, const geometry::VPolytope& Z_m);

// conv{ΔPᵢ zⱼ} over all uncertainty vertices i and container vertices j.
geometry::VPolytope md_image(const std::vector<Matrix>& dP_vertices,
                             const geometry::VPolytope& Z);

// {z | ΔPᵢ z ∈ WM for every i}, optionally intersected with `box`, with
// redundant rows removed. Without a box the result may be unbounded.
geometry::HPolytope container_preimage(
    const std::vector<Matrix>& dP_vertices, const geometry::HPolytope& WM,
    const std::optional<geometry::HPolytope>& box = std::nullopt);

// `factor` times the bounding box of Z. Axes along which Z is unbounded get
// `factor` times the largest finite half-width (or `factor` if none is).
geometry::HPolytope preimage_box(const geometry::HPolytope& Z, double factor = 1e3);

// Vertices on the unit sphere. For n + m = 3 these are
// [sinθ cosφ, sinθ sinφ, cosθ] with θ, φ on `n_theta` × `n_phi` evenly spaced
// points of [0, 2π] (endpoints included), duplicates merged. Other
// dimensions get the cross-polytope together with the normalized cube corners.
geometry::VPolytope default_container(int n, int m, int n_theta = 5, int n_phi = 5);

// Which support-preservation families constrain the enlarged MD image, and
// over how many powers of the closed loop.
struct WmRelaxation {
  int N_i = 3;
  int N_j = 0;
  bool keep_Z = true;       // rows of Z through Π (A_cl)^i
  bool keep_Z_m0 = false;   // rows of the initial container through Π (A_cl)^i
  bool keep_S_inf0 = false; // rows of the initial terminal set through (A_cl)^i
  bool keep_S_chain = false;
  std::vector<double> weights;  // empty: all ones
};

struct WmReferenceSets {
  std::optional<geometry::HPolytope> Z_m0;
  std::optional<geometry::HPolytope> S_inf0;
  std::vector<geometry::HPolytope> S_chain;  // S_1 .. S_{N_j}
};

// Rows r whose support over the MD image must not grow.
Matrix wm_constraint_rows(const UncertainSystem& sys, const WmRelaxation& relax,
                          const WmReferenceSets& refs = {});

struct WmOptimization {
  geometry::VPolytope WM;  // conv{β_l w_l}
  Vector beta;
};

// max Σ c_l β_l subject to β_l ≥ 1 and β_l (r·w_l) ≤ max_k (r·w_k) for every
// constraint row r and vertex w_l of WM0.
WmOptimization optimize_wm(const geometry::VPolytope& WM0, const Matrix& rows,
                           const std::vector<double>& weights = {},
                           const geometry::LpSolver& lp = geometry::default_lp_solver());
WmOptimization optimize_wm(const UncertainSystem& sys, const geometry::VPolytope& WM0,
                           const WmRelaxation& relax, const WmReferenceSets& refs = {});

// The three containers of the reference construction: the default shape,
// the preimage of its MD image, and the preimage of the enlarged MD image.
struct ContainerChain {
  Container Z0;
  Container Z1;
  Container Z2;
  geometry::VPolytope WM0;
  geometry::VPolytope WM_opt;
  Vector beta;
};

ContainerChain build_container_chain(const UncertainSystem& sys, int n_theta,
                                     int n_phi, const WmRelaxation& relax,
                                     const WmReferenceSets& refs = {});

}  // namespace tube_rmpc
