#pragma once

#include <iosfwd>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

#include "tube_rmpc/geometry/polytope.hpp"

namespace tube_rmpc::geometry {

using AnyPolytope = std::variant<HPolytope, VPolytope>;

// {"H": [[...], ...], "h": [...]} and {"V": [[...], ...]} (one point per
// inner array). Doubles round-trip exactly.
nlohmann::json to_json(const HPolytope& P);
nlohmann::json to_json(const VPolytope& P);
AnyPolytope polytope_from_json(const nlohmann::json& j);

nlohmann::json matrix_to_json(const Matrix& M);
Matrix matrix_from_json(const nlohmann::json& j);
nlohmann::json vector_to_json(const Vector& v);
Vector vector_from_json(const nlohmann::json& j);

// Facet form of either representation (vertex sets are converted).
HPolytope as_hpolytope(const AnyPolytope& P);
VPolytope as_vpolytope(const AnyPolytope& P);

// 17 significant digits, enough to parse back to the same double.
std::string format_double(double x);

// One vertex per line, coordinates separated by commas, with a header row
// x1,x2,...
void write_vertices_csv(std::ostream& out, const VPolytope& P);

}  // namespace tube_rmpc::geometry
