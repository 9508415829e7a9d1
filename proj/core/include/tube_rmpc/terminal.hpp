#pragma once

#include <vector>

#include "tube_rmpc/container.hpp"
#include "tube_rmpc/model.hpp"

namespace tube_rmpc {

// Admissible interval for the initial scale γ₀ of the terminal recursion.
struct GammaBounds {
  double lo = 0.0;
  double hi = 0.0;
  // hi = min(gamma_bar1, gamma_bar2)
  double gamma_bar1 = 0.0;  // min γ with X_xu ⊆ γ X_m
  double gamma_bar2 = 0.0;  // max γ with W ⊕ γ PZ_m ⊆ X_xu

  bool admissible() const { return lo <= hi; }
  bool contains(double gamma) const { return lo <= gamma && gamma <= hi; }
};

// Throws kNoAdmissibleGamma when lo > hi.
GammaBounds gamma_bounds(const UncertainSystem& sys, const Container& c);

struct LambdaInfinity {
  double value = 0.0;
  // ‖A_cl^k_max‖₂ · diam(W ⊕ value·PZ_m), a bound on the neglected tail.
  double residual = 0.0;
};

// Steady-state container scale from the k_max-term truncation of
// Σ (A_cl)^i W and Σ (A_cl)^i PZ_m, measured against X_m. Throws
// kNoFiniteLambda when the MD part alone does not fit inside X_m.
LambdaInfinity lambda_infinity(const UncertainSystem& sys, const Container& c,
                               int k_max = 30);

struct TerminalOptions {
  int max_iterations = 500;
  double restart_tol = 1e-9;
  int k_max = 30;
};

struct TerminalSet {
  geometry::HPolytope S_inf;
  geometry::VPolytope S_inf_vertices;
  double gamma0 = 0.0;      // requested initial scale
  double gamma_inf = 0.0;   // min γ with S_inf ⊆ γ X_m
  double gamma_used = 0.0;  // scale in force when the recursion converged
  LambdaInfinity lambda_inf;
  int iterations = 0;       // recursion steps, summed over restarts
  int steps = 0;            // n* of the final run
  std::vector<double> gamma_trace;  // γ after each restart
  // S_0 .. S_{n*} of the final run.
  std::vector<geometry::HPolytope> chain;
};

// Output admissible set by the γ-updating recursion
//   S_0 = γ X_m ∩ X_xu,
//   S_n = {x ∈ S_0 | A_cl x ∈ S_{n−1} ⊖ (W ⊕ γ PZ_m)},
// restarting with γ ← min{γ' | S_n ⊆ γ' X_m} whenever that scale drops, until
// S_n = S_{n−1}. Throws kEmptyTerminalSet or kIterationCap.
TerminalSet output_admissible_set(const UncertainSystem& sys, const Container& c,
                                  double gamma0, const TerminalOptions& options = {});

}  // namespace tube_rmpc
