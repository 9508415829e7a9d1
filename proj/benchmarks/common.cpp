#include "common.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

namespace bench {

using namespace tube_rmpc;

const Setup& setup() {
  static const Setup s = [] {
    std::ifstream in(std::string(TUBE_RMPC_DATA_DIR) + "/paper_sec5.json");
    const nlohmann::json cfg = nlohmann::json::parse(in);
    Setup r;
    r.sys = system_from_json(cfg.at("system"));
    WmRelaxation relax;
    relax.N_i = 2;
    r.chain = build_container_chain(r.sys, 5, 5, relax);
    r.terminal = output_admissible_set(r.sys, r.chain.Z2, 10.0);
    r.controller = offline_prepare(r.sys, r.chain.Z2, r.terminal, 10, Matrix::Identity(1, 1));
    return r;
  }();
  return s;
}

}  // namespace bench
