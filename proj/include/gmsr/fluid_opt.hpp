#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "gmsr/flownet.hpp"
#include "gmsr/system.hpp"

namespace gmsr {

/// Minimizer of the total fluid workload sum_b N_b subject to flow balance
/// sum_f lambda_f x_{f,b} = mu_b(N_b).
struct FluidOptimum {
  WorkloadVector workload;  // N*
  RoutingMatrix routing;    // x*
  double objective = 0.0;   // sum_b N*_b
  double kkt_residual = 0.0;
  std::size_t iterations = 0;
  std::vector<double> objective_history;  // filled when requested
};

struct FluidSolveOptions {
  double tol = 1e-10;  // target kkt_residual
  std::size_t max_iterations = 100'000;
  bool record_history = false;
  /// Interior starting routing; when absent a max-flow based interior point is used.
  std::optional<RoutingMatrix> initial;
};

/// Entropic mirror descent on the per-frontend simplices over the inflow
/// objective sum_b mu_b^{-1}(w_b). Throws InfeasibleError (with a violating
/// frontend subset) when no interior point exists and ConvergenceError when
/// the iteration cap is hit above tolerance.
FluidOptimum solve_fluid_optimum(const BipartiteSystem& sys, const FluidSolveOptions& options = {});

/// Optimality gap of (N, x): per frontend, the gradient spread across its
/// supported backends (x > 1e-8) plus any excess of an unsupported backend's
/// gradient over the supported level, maximized over frontends, plus the
/// largest per-backend flow-balance violation.
double kkt_residual(const BipartiteSystem& sys, const WorkloadVector& workload, const RoutingMatrix& x);

/// Exhaustive grid over the free routing coordinates (at most two). Intended
/// as an independent oracle for small systems.
FluidOptimum brute_force_optimum(const BipartiteSystem& sys, double grid_step);

/// Limiting service rates under overload: mu_b(N~*_b) on the stabilizable
/// backends, mu_b(infinity) elsewhere.
struct OverloadEquilibrium {
  std::vector<double> rates;      // L*
  WorkloadVector workload;        // N~*; +infinity on overloaded backends
  StabilityDecomposition decomposition;
};

OverloadEquilibrium equilibrium_rates(const BipartiteSystem& sys);

}  // namespace gmsr
