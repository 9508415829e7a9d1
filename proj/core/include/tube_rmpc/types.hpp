#pragma once

#include <Eigen/Dense>

namespace tube_rmpc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Numerical tolerances shared by the set algebra. feas_tol is the slack
// accepted on a facet inequality when testing containment and equality.
struct Tolerances {
  double feas_tol = 1e-9;
  // Relative to the bounding-box diameter of the point cloud.
  double vertex_dedup = 1e-8;
};

inline constexpr Tolerances kDefaultTolerances{};

}  // namespace tube_rmpc
