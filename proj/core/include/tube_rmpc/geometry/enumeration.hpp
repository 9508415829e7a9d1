#pragma once

#include <vector>

#include "tube_rmpc/types.hpp"

namespace tube_rmpc::geometry {

// Vertices (as columns) of the bounded set {x | Hx ≤ h}, computed with the
// double-description method on the homogenized cone. Supported for dim ≤ 4.
// Returns an empty matrix when the set is empty; throws kUnbounded when the
// set has a recession direction.
Matrix enumerate_vertices(const Matrix& H, const Vector& h, double tol = 1e-9);

// Affine hull of a point cloud (points as columns): origin plus an orthonormal
// basis (columns) of the directions it spans.
struct AffineHull {
  Vector origin;
  Matrix basis;

  int dim() const { return static_cast<int>(basis.cols()); }
};

AffineHull affine_hull(const Matrix& points, double tol = 1e-9);

// Facets {x | Hx ≤ h} (unit-norm rows) of the hull of full-dimensional
// points. Throws kDegenerate when the points span a lower-dimensional flat.
struct FacetEnumeration {
  Matrix H;
  Vector h;
  // Indices of the input points that are vertices of the hull.
  std::vector<int> vertex_indices;
};

FacetEnumeration enumerate_facets(const Matrix& points, double tol = 1e-9);

// Extreme points of the hull of `points`, duplicates removed. Works for
// point clouds of any affine dimension ≤ 4, including degenerate ones.
// In 2D the result is in counter-clockwise order.
Matrix hull_vertices(const Matrix& points, double dedup_tol = 1e-8);

// Counter-clockwise convex hull of planar points (Andrew's monotone chain).
Matrix planar_hull(const Matrix& points, double tol = 1e-12);

}  // namespace tube_rmpc::geometry
