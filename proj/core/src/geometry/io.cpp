#include "tube_rmpc/geometry/io.hpp"

#include <cstdio>
#include <ostream>

#include "tube_rmpc/error.hpp"

namespace tube_rmpc::geometry {

nlohmann::json matrix_to_json(const Matrix& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < M.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error(ErrorCode::kInvalidArgument, "matrix must be an array");
  if (j.empty()) return Matrix(0, 0);
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.at(0).size());
  Matrix M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j.at(i);
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw Error(ErrorCode::kDimensionMismatch, "ragged matrix rows");
    }
    for (Eigen::Index k = 0; k < cols; ++k) M(i, k) = row.at(k).get<double>();
  }
  return M;
}

nlohmann::json vector_to_json(const Vector& v) {
  nlohmann::json out = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector vector_from_json(const nlohmann::json& j) {
  if (j.is_number()) return Vector::Constant(1, j.get<double>());
  if (!j.is_array()) throw Error(ErrorCode::kInvalidArgument, "vector must be an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

nlohmann::json to_json(const HPolytope& P) {
  return {{"H", matrix_to_json(P.H())}, {"h", vector_to_json(P.h())}};
}

nlohmann::json to_json(const VPolytope& P) {
  return {{"V", matrix_to_json(P.vertices().transpose())}};
}

AnyPolytope polytope_from_json(const nlohmann::json& j) {
  if (j.contains("H")) {
    return HPolytope(matrix_from_json(j.at("H")), vector_from_json(j.at("h")));
  }
  if (j.contains("V")) {
    return VPolytope(Matrix(matrix_from_json(j.at("V")).transpose()));
  }
  throw Error(ErrorCode::kInvalidArgument, "polytope needs either H/h or V");
}

HPolytope as_hpolytope(const AnyPolytope& P) {
  if (const auto* h = std::get_if<HPolytope>(&P)) return *h;
  return facet_enum(std::get<VPolytope>(P));
}

VPolytope as_vpolytope(const AnyPolytope& P) {
  if (const auto* v = std::get_if<VPolytope>(&P)) return *v;
  return vertex_enum(std::get<HPolytope>(P));
}

std::string format_double(double x) {
  char buf[32];
  const int len = std::snprintf(buf, sizeof(buf), "%.17g", x);
  return std::string(buf, static_cast<std::size_t>(len));
}

void write_vertices_csv(std::ostream& out, const VPolytope& P) {
  for (int i = 0; i < P.dim(); ++i) out << (i ? "," : "") << 'x' << i + 1;
  out << '\n';
  for (int j = 0; j < P.num_vertices(); ++j) {
    for (int i = 0; i < P.dim(); ++i) {
      out << (i ? "," : "") << format_double(P.vertices()(i, j));
    }
    out << '\n';
  }
}

}  // namespace tube_rmpc::geometry
