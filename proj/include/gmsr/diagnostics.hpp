#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gmsr/fluid_dyn.hpp"
#include "gmsr/fluid_opt.hpp"
#include "gmsr/system.hpp"
#include "gmsr/tiers.hpp"

namespace gmsr {

/// V(N, x) = sum_b |sum_f lambda_f x_{f,b} - mu_b(N_b)|.
double lyapunov(const BipartiteSystem& sys, const WorkloadVector& workload, const RoutingMatrix& x);

/// The part of V contributed by the backends of one tier.
double tier_absolute_drift(const BipartiteSystem& sys, const WorkloadVector& workload, const RoutingMatrix& x,
                           const Tier& tier);

struct SlackConstants {
  double kappa = 0.0;         // min_b mu_b'(N*_b) / 2
  double delta = 0.0;         // headroom of every frontend subset at N~
  WorkloadVector threshold;   // N~ with mu_b'(N~_b) = kappa
  FluidOptimum optimum;
};

/// Requires a feasible system. Delta is exact: subset enumeration up to 12
/// frontends, min cuts beyond.
SlackConstants capacity_slack(const BipartiteSystem& sys);

/// N_b <= N~_b for every backend.
bool in_invariant_set(const WorkloadVector& workload, const SlackConstants& slack);

/// J(N) = sum_b max(N_b - N~_b, 0).
double overshoot(const WorkloadVector& workload, const SlackConstants& slack);

struct ConvergenceCertificate {
  std::vector<double> times;
  std::vector<double> lyapunov;
  std::vector<double> overshoot;
  std::optional<double> entry_time;  // first sample inside K
  double fitted_rate = 0.0;          // least-squares decay rate of log V after entry
  std::vector<std::string> violations;
  double tolerance = 0.0;

  bool passed() const noexcept { return violations.empty(); }
};

/// Checks monotone V, exponential decay at 0.9 kappa after entering K, the
/// workload-sum bound V / kappa, the K entry-time bound and the J slope bound,
/// each with tolerance 1e-7 + 10 h.
ConvergenceCertificate certify_trajectory(const BipartiteSystem& sys, const FluidTrajectory& traj,
                                          const SlackConstants& slack);

}  // namespace gmsr
