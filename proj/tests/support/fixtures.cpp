#include "fixtures.hpp"

#include <fstream>

namespace fixture {

using namespace tube_rmpc;

std::filesystem::path data_dir() { return TUBE_RMPC_DATA_DIR; }

nlohmann::json reference_config() {
  std::ifstream in(data_dir() / "paper_sec5.json");
  return nlohmann::json::parse(in);
}

const Reference& reference() {
  static const Reference ref = [] {
    const nlohmann::json cfg = reference_config();
    Reference r;
    r.sys = system_from_json(cfg.at("system"));
    WmRelaxation relax;
    relax.N_i = 2;
    r.chain = build_container_chain(r.sys, 5, 5, relax);
    r.terminal0 = output_admissible_set(r.sys, r.chain.Z0, 10.0);
    r.terminal2 = output_admissible_set(r.sys, r.chain.Z2, 10.0);
    const Matrix psi = Matrix::Identity(1, 1);
    r.controller0 = offline_prepare(r.sys, r.chain.Z0, r.terminal0, 10, psi);
    r.controller2 = offline_prepare(r.sys, r.chain.Z2, r.terminal2, 10, psi);
    r.x0 = (Vector(2) << 10.0, -10.0).finished();
    r.theta = (Vector(3) << 0.8, 0.2, -0.5).finished();
    return r;
  }();
  return ref;
}

UncertainSystem scalar_nominal(double a, double b, double k, double x_max, double u_max) {
  Matrix A(1, 1), B(1, 1), K(1, 1);
  A << a;
  B << b;
  K << k;
  const geometry::HPolytope W((Matrix(2, 1) << 1, -1).finished(), Vector::Zero(2));
  const geometry::HPolytope Z =
      geometry::HPolytope::box((Vector(2) << -x_max, -u_max).finished(),
                               (Vector(2) << x_max, u_max).finished());
  return make_system(A, B, K, {Matrix::Zero(1, 2)}, W, Z);
}

}  // namespace fixture
