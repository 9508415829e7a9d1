#pragma once

#include <optional>

#include "tube_rmpc/geometry/lp.hpp"
#include "tube_rmpc/types.hpp"

namespace tube_rmpc::geometry {

// {x | Hx ≤ h}. Rows are scaled to unit Euclidean norm on construction, so
// offsets are distances from the origin and tolerances are comparable across
// facets.
class HPolytope {
 public:
  HPolytope() = default;
  HPolytope(Matrix H, Vector h);

  // Axis-aligned box lo ≤ x ≤ hi.
  static HPolytope box(const Vector& lo, const Vector& hi);
  static HPolytope box(int dim, double half_width);

  int dim() const { return static_cast<int>(H_.cols()); }
  int num_facets() const { return static_cast<int>(H_.rows()); }
  const Matrix& H() const { return H_; }
  const Vector& h() const { return h_; }

  bool origin_interior() const { return num_facets() > 0 && h_.minCoeff() > 0.0; }
  bool contains(const Vector& x, double tol = kDefaultTolerances.feas_tol) const;
  bool is_empty(const LpSolver& lp = default_lp_solver()) const;
  // Support finite along ±every axis.
  bool is_bounded(const LpSolver& lp = default_lp_solver()) const;

  // α·P for α ≥ 0 (α = 0 yields the cone {Hx ≤ 0}).
  HPolytope scaled(double alpha) const;

 private:
  Matrix H_;
  Vector h_;
};

// Convex hull of finitely many points, stored as the columns of a matrix.
class VPolytope {
 public:
  VPolytope() = default;
  // Takes the points as given; call canonical() to strip interior points.
  explicit VPolytope(Matrix vertices);

  static VPolytope point(const Vector& x);
  static VPolytope box(const Vector& lo, const Vector& hi);

  int dim() const { return static_cast<int>(V_.rows()); }
  int num_vertices() const { return static_cast<int>(V_.cols()); }
  const Matrix& vertices() const { return V_; }

  // Hull vertices only, near-duplicates merged (2D: counter-clockwise).
  VPolytope canonical(const Tolerances& tol = kDefaultTolerances) const;
  VPolytope scaled(double alpha) const;
  VPolytope translated(const Vector& x) const;

 private:
  Matrix V_;
};

// Support function max_{x∈P} dᵀx.
double support(const VPolytope& P, const Vector& d);
double support(const HPolytope& P, const Vector& d,
               const LpSolver& lp = default_lp_solver());

// Support value of P along every row of M. With M the facet matrix of a
// reference set this is the per-facet tightening offset.
Vector support_rows(const Matrix& M, const VPolytope& P);

VPolytope minkowski_sum(const VPolytope& A, const VPolytope& B,
                        const Tolerances& tol = kDefaultTolerances);

// {x | H_A x ≤ h_A − Δ} with Δᵢ = support(B, [H_A]ᵢ). Rows are kept as they
// are; check is_empty() on the result when emptiness matters.
HPolytope pontryagin_diff(const HPolytope& A, const VPolytope& B);
HPolytope pontryagin_diff(const HPolytope& A, const HPolytope& B);

// {x | H_A x ≤ λ₁ h_A − λ₂ Δ^A_B}.
HPolytope scaled_diff(const HPolytope& A, double lambda1, const VPolytope& B,
                      double lambda2);

VPolytope linear_map(const Matrix& M, const VPolytope& P,
                     const Tolerances& tol = kDefaultTolerances);

// {x | H M x ≤ h}. Rows annihilated by M are dropped (or make the result
// empty when their offset is negative).
HPolytope preimage(const HPolytope& P, const Matrix& M);

HPolytope intersect(const HPolytope& A, const HPolytope& B,
                    const Tolerances& tol = kDefaultTolerances,
                    const LpSolver& lp = default_lp_solver());

// Removes duplicate rows, then greedily drops every facet whose offset is
// not attained over the others.
HPolytope remove_redundancy(const HPolytope& P,
                            const Tolerances& tol = kDefaultTolerances,
                            const LpSolver& lp = default_lp_solver());

bool contains_set(const HPolytope& A, const VPolytope& B,
                  const Tolerances& tol = kDefaultTolerances);
bool contains_set(const HPolytope& A, const HPolytope& B,
                  const Tolerances& tol = kDefaultTolerances,
                  const LpSolver& lp = default_lp_solver());

// min γ ≥ 0 with S ⊆ γX. X must contain the origin in its interior.
double min_scale_containment(const VPolytope& S, const HPolytope& X);
double min_scale_containment(const HPolytope& S, const HPolytope& X,
                             const LpSolver& lp = default_lp_solver());

bool set_equal(const HPolytope& A, const HPolytope& B,
               const Tolerances& tol = kDefaultTolerances);
bool set_equal(const VPolytope& A, const VPolytope& B,
               const Tolerances& tol = kDefaultTolerances);

// Representation conversion. vertex_enum throws kInfeasible on an empty set
// and kUnbounded on an unbounded one; facet_enum throws kDegenerate for
// point sets that are not full-dimensional.
VPolytope vertex_enum(const HPolytope& P);
HPolytope facet_enum(const VPolytope& P);

// Lebesgue measure in 2D or 3D; lower-dimensional sets have volume 0.
double volume(const VPolytope& P);
double volume(const HPolytope& P);

}  // namespace tube_rmpc::geometry
