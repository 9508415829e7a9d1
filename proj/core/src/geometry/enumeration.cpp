#include "tube_rmpc/geometry/enumeration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tube_rmpc/error.hpp"

namespace tube_rmpc::geometry {

namespace {

constexpr int kMaxDim = 4;

struct Ray {
  Vector y;
  std::vector<bool> tight;  // over constraint rows
};

int count_common(const std::vector<bool>& a, const std::vector<bool>& b,
                 std::vector<bool>& out) {
  int count = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    out[i] = a[i] && b[i];
    count += out[i];
  }
  return count;
}

bool is_subset(const std::vector<bool>& a, const std::vector<bool>& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] && !b[i]) return false;
  }
  return true;
}

// Removes near-duplicate columns; `tol` is absolute.
std::vector<int> unique_columns(const Matrix& points, double tol) {
  std::vector<int> keep;
  for (int j = 0; j < points.cols(); ++j) {
    bool dup = false;
    for (int k : keep) {
      if ((points.col(j) - points.col(k)).lpNorm<Eigen::Infinity>() <= tol) {
        dup = true;
        break;
      }
    }
    if (!dup) keep.push_back(j);
  }
  return keep;
}

Matrix select_columns(const Matrix& points, const std::vector<int>& idx) {
  Matrix out(points.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out.col(k) = points.col(idx[k]);
  return out;
}

double cloud_scale(const Matrix& points) {
  if (points.cols() == 0) return 0.0;
  const Vector lo = points.rowwise().minCoeff();
  const Vector hi = points.rowwise().maxCoeff();
  return (hi - lo).norm();
}

double cross(const Eigen::Vector2d& o, const Eigen::Vector2d& a,
             const Eigen::Vector2d& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

std::vector<int> planar_hull_indices(const Matrix& points, double tol) {
  const int n = static_cast<int>(points.cols());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (points(0, a) != points(0, b)) return points(0, a) < points(0, b);
    return points(1, a) < points(1, b);
  });
  if (n < 3) return order;
  // c is dropped when it lies within tol·scale of the line through a and b.
  const double eps = tol * std::max(1.0, cloud_scale(points));
  std::vector<int> hull(2 * n);
  int k = 0;
  auto pt = [&](int i) { return Eigen::Vector2d(points(0, i), points(1, i)); };
  auto turns_left = [&](int a, int b, int c) {
    const Eigen::Vector2d pa = pt(a), pb = pt(b), pc = pt(c);
    return cross(pa, pb, pc) > eps * std::max((pb - pa).norm(), (pc - pa).norm());
  };
  for (int i = 0; i < n; ++i) {
    while (k >= 2 && !turns_left(hull[k - 2], hull[k - 1], order[i])) --k;
    hull[k++] = order[i];
  }
  for (int i = n - 2, t = k + 1; i >= 0; --i) {
    while (k >= t && !turns_left(hull[k - 2], hull[k - 1], order[i])) --k;
    hull[k++] = order[i];
  }
  hull.resize(std::max(k - 1, 1));
  return hull;
}

}  // namespace

Matrix enumerate_vertices(const Matrix& H, const Vector& h, double tol) {
  const int d = static_cast<int>(H.cols());
  if (H.rows() != h.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "H and h row counts differ");
  }
  if (d < 1 || d > kMaxDim) {
    throw Error(ErrorCode::kInvalidArgument,
                "vertex enumeration supports dimensions 1 to 4");
  }
  const int D = d + 1;

  // Homogenized cone {y = (x, t) | [H −h] y ≤ 0, −t ≤ 0}, rows unit norm.
  std::vector<Eigen::RowVectorXd> rows;
  for (int i = 0; i < H.rows(); ++i) {
    Eigen::RowVectorXd a(D);
    a << H.row(i), -h(i);
    const double s = a.norm();
    if (s == 0.0) continue;
    rows.push_back(a / s);
  }
  {
    Eigen::RowVectorXd a = Eigen::RowVectorXd::Zero(D);
    a(d) = -1.0;
    rows.push_back(a);
  }
  const int nr = static_cast<int>(rows.size());

  // Initial simplicial cone from D independent rows.
  std::vector<int> basis_rows;
  Matrix Q(D, 0);
  for (int i = nr - 1; i >= 0 && static_cast<int>(basis_rows.size()) < D; --i) {
    Vector v = rows[i].transpose();
    if (Q.cols() > 0) v -= Q * (Q.transpose() * v);
    if (v.norm() > 1e-9) {
      Q.conservativeResize(D, Q.cols() + 1);
      Q.col(Q.cols() - 1) = v.normalized();
      basis_rows.push_back(i);
    }
  }
  if (static_cast<int>(basis_rows.size()) < D) {
    // The cone has a lineality space: the set is empty or unbounded.
    if (H.rows() == 0) throw Error(ErrorCode::kUnbounded, "no constraints");
    throw Error(ErrorCode::kUnbounded, "constraint normals do not span the space");
  }
  Matrix AB(D, D);
  for (int k = 0; k < D; ++k) AB.row(k) = rows[basis_rows[k]];
  const Matrix R0 = -AB.inverse();

  std::vector<bool> processed(nr, false);
  for (int r : basis_rows) processed[r] = true;
  std::vector<Ray> rays;
  for (int k = 0; k < D; ++k) {
    Ray ray{R0.col(k).normalized(), std::vector<bool>(nr, false)};
    for (int j = 0; j < D; ++j) {
      if (j != k) ray.tight[basis_rows[j]] = true;
    }
    rays.push_back(std::move(ray));
  }

  std::vector<bool> common(nr);
  for (int i = 0; i < nr && !rays.empty(); ++i) {
    if (processed[i]) continue;
    processed[i] = true;
    const Eigen::RowVectorXd& a = rows[i];
    std::vector<double> val(rays.size());
    std::vector<int> pos, neg;
    for (std::size_t k = 0; k < rays.size(); ++k) {
      val[k] = a.dot(rays[k].y);
      if (val[k] > tol) {
        pos.push_back(static_cast<int>(k));
      } else if (val[k] < -tol) {
        neg.push_back(static_cast<int>(k));
      } else {
        rays[k].tight[i] = true;
      }
    }
    if (pos.empty()) continue;

    std::vector<Ray> next;
    for (int p : pos) {
      for (int q : neg) {
        if (count_common(rays[p].tight, rays[q].tight, common) < D - 2) continue;
        bool adjacent = true;
        for (std::size_t k = 0; k < rays.size() && adjacent; ++k) {
          if (static_cast<int>(k) == p || static_cast<int>(k) == q) continue;
          if (is_subset(common, rays[k].tight)) adjacent = false;
        }
        if (!adjacent) continue;
        Vector y = val[p] * rays[q].y - val[q] * rays[p].y;
        const double s = y.norm();
        if (s == 0.0) continue;
        Ray ray{y / s, common};
        ray.tight[i] = true;
        next.push_back(std::move(ray));
      }
    }
    for (std::size_t k = 0; k < rays.size(); ++k) {
      if (val[k] <= tol) next.push_back(std::move(rays[k]));
    }
    rays = std::move(next);
  }

  Matrix V(d, 0);
  bool has_direction = false;
  for (const Ray& ray : rays) {
    const double t = ray.y(d);
    if (t > tol) {
      V.conservativeResize(d, V.cols() + 1);
      V.col(V.cols() - 1) = ray.y.head(d) / t;
    } else {
      has_direction = true;
    }
  }
  if (V.cols() == 0) return V;
  if (has_direction) {
    throw Error(ErrorCode::kUnbounded, "polyhedron has a recession direction");
  }
  const double scale = std::max(1.0, V.cwiseAbs().maxCoeff());
  return select_columns(V, unique_columns(V, 1e-9 * scale));
}

AffineHull affine_hull(const Matrix& points, double tol) {
  if (points.cols() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "affine hull of an empty set");
  }
  AffineHull hull;
  hull.origin = points.rowwise().mean();
  const Matrix centered = points.colwise() - hull.origin;
  const double scale = cloud_scale(points);
  const double magnitude = std::max(1.0, points.cwiseAbs().maxCoeff());
  if (scale <= tol * magnitude) {
    hull.basis = Matrix(points.rows(), 0);
    return hull;
  }
  Eigen::JacobiSVD<Matrix> svd(centered, Eigen::ComputeThinU);
  const Vector& s = svd.singularValues();
  int rank = 0;
  while (rank < s.size() && s(rank) > tol * s(0)) ++rank;
  hull.basis = svd.matrixU().leftCols(rank);
  return hull;
}

FacetEnumeration enumerate_facets(const Matrix& points, double tol) {
  const int d = static_cast<int>(points.rows());
  if (points.cols() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "facets of an empty set");
  }
  if (d == 1) {
    Eigen::Index imin, imax;
    const double lo = points.row(0).minCoeff(&imin);
    const double hi = points.row(0).maxCoeff(&imax);
    if (hi - lo <= tol * std::max(1.0, std::abs(hi))) {
      throw Error(ErrorCode::kDegenerate, "points span a single point");
    }
    FacetEnumeration out;
    out.H = (Matrix(2, 1) << 1.0, -1.0).finished();
    out.h = (Vector(2) << hi, -lo).finished();
    out.vertex_indices = {static_cast<int>(imin), static_cast<int>(imax)};
    return out;
  }
  const AffineHull aff = affine_hull(points, tol);
  if (aff.dim() < d) {
    throw Error(ErrorCode::kDegenerate,
                "points span an affine subspace of dimension " +
                    std::to_string(aff.dim()) + " in dimension " +
                    std::to_string(d));
  }
  const Vector& c = aff.origin;
  const Matrix centered = points.colwise() - c;
  const double s = centered.colwise().norm().maxCoeff();

  // Polar of the recentred, rescaled cloud: {y | pᵢᵀy ≤ 1}.
  Matrix P = (centered / s).transpose();
  const Matrix Y = enumerate_vertices(P, Vector::Ones(P.rows()), tol);

  FacetEnumeration out;
  out.H.resize(Y.cols(), d);
  out.h.resize(Y.cols());
  for (int j = 0; j < Y.cols(); ++j) {
    const double norm = Y.col(j).norm();
    out.H.row(j) = Y.col(j).transpose() / norm;
    out.h(j) = (s + Y.col(j).dot(c)) / norm;
  }
  const double slack_tol = 1e-7 * s;
  std::vector<int> candidates;
  for (int i = 0; i < points.cols(); ++i) {
    const Vector slack = out.h - out.H * points.col(i);
    int tight = 0;
    for (int r = 0; r < slack.size(); ++r) tight += std::abs(slack(r)) <= slack_tol;
    if (tight >= d) candidates.push_back(i);
  }
  const Matrix cand = select_columns(points, candidates);
  for (int k : unique_columns(cand, 1e-9 * s)) {
    out.vertex_indices.push_back(candidates[k]);
  }
  return out;
}

Matrix planar_hull(const Matrix& points, double tol) {
  if (points.rows() != 2) {
    throw Error(ErrorCode::kDimensionMismatch, "planar hull needs 2D points");
  }
  return select_columns(points, planar_hull_indices(points, tol));
}

Matrix hull_vertices(const Matrix& points, double dedup_tol) {
  const int d = static_cast<int>(points.rows());
  if (points.cols() == 0) return points;
  if (d > kMaxDim) {
    throw Error(ErrorCode::kInvalidArgument, "hulls supported up to dimension 4");
  }
  const double scale = cloud_scale(points);
  const Matrix pts = select_columns(
      points, unique_columns(points, dedup_tol * std::max(scale, 1e-300)));
  if (pts.cols() == 1) return pts;

  const AffineHull aff = affine_hull(pts);
  const int k = aff.dim();
  if (k == 0) return pts.col(0);
  const Matrix local = aff.basis.transpose() * (pts.colwise() - aff.origin);
  std::vector<int> idx;
  if (k == 1) {
    Eigen::Index imin, imax;
    local.row(0).minCoeff(&imin);
    local.row(0).maxCoeff(&imax);
    idx = {static_cast<int>(imin), static_cast<int>(imax)};
  } else if (k == 2) {
    idx = planar_hull_indices(d == 2 ? pts : local, 1e-12);
  } else {
    idx = enumerate_facets(d == k ? pts : local).vertex_indices;
  }
  return select_columns(pts, idx);
}

}  // namespace tube_rmpc::geometry
