#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tube_rmpc/geometry/polytope.hpp"

namespace tube_rmpc {

// x⁺ = (A_n + ΔA) x + (B_n + ΔB) u + w, with [ΔA ΔB] ∈ conv{dP_vertices},
// w ∈ W and [x; u] ∈ Z, stabilized by u = Kx.
struct UncertainSystem {
  Matrix A_n;
  Matrix B_n;
  Matrix K;
  std::vector<Matrix> dP_vertices;
  // Present when the uncertainty was given as Σθᵢ ΔPᵢ with |θᵢ| ≤ theta_box.
  std::vector<Matrix> dP_basis;
  double theta_box = 1.0;
  geometry::HPolytope W;
  geometry::VPolytope W_vertices;
  geometry::HPolytope Z;

  int n() const { return static_cast<int>(A_n.rows()); }
  int m() const { return static_cast<int>(B_n.cols()); }
  Matrix A_cl() const { return A_n + B_n * K; }
  // Π = [I; K].
  Matrix Pi() const;
};

// Builds the system and checks matrix shapes; assumption checks are left to
// validate().
UncertainSystem make_system(Matrix A_n, Matrix B_n, Matrix K,
                            std::vector<Matrix> dP_vertices,
                            geometry::HPolytope W, geometry::HPolytope Z);

// 2ᵖ sign combinations of Σ±θ_box·ΔPᵢ.
std::vector<Matrix> vertices_from_basis(const std::vector<Matrix>& basis,
                                        double theta_box = 1.0);

// Reads {"A_n", "B_n", "K", "W", "Z", "dP_basis", "theta_box"} or
// {..., "dP_vertices"}.
UncertainSystem system_from_json(const nlohmann::json& j);
nlohmann::json system_to_json(const UncertainSystem& sys);

struct AssumptionCheck {
  std::string id;
  bool passed = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<AssumptionCheck> checks;
  std::vector<std::string> warnings;

  bool ok() const;
  // First failing check, or nullptr.
  const AssumptionCheck* first_failure() const;
};

// A1: Z contains the origin in its interior. A2: same for W. A3: the origin
// lies in the relative interior of the uncertainty hull. A4: every closed-loop
// vertex matrix is Schur (|eig| < 1 − 1e-10).
ValidationReport validate(const UncertainSystem& sys);
// Throws kAssumptionViolated naming the first failing assumption.
void require_valid(const UncertainSystem& sys);

double spectral_radius(const Matrix& A);

// {x | [x; Kx] ∈ P}, redundancy removed.
geometry::HPolytope state_slice(const geometry::HPolytope& P, const Matrix& K);

// A_n x̄ + B_n (K x̄ + v).
Vector nominal_step(const UncertainSystem& sys, const Vector& x_bar, const Vector& v);

// (Σ θᵢ ΔPᵢ) [x; u].
Matrix combine_basis(const std::vector<Matrix>& basis, const Vector& theta);
Vector md_realization(const Vector& x, const Vector& u, const Vector& theta,
                      const std::vector<Matrix>& basis);

}  // namespace tube_rmpc
