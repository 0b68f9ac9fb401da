#pragma once

#include <cstddef>
#include <vector>

#include "gmsr/system.hpp"
#include "gmsr/tiers.hpp"

namespace gmsr {

enum class IntegratorMode { Sliding, StrictArgmax };

struct IntegratorConfig {
  double step = 1e-3;     // h, fluid time
  double tie_tol = 1e-3;  // gradient band treated as a tie
  IntegratorMode mode = IntegratorMode::Sliding;
  std::size_t record_every = 1;
  // Pulls gradients inside a tier toward their mean at this rate (per unit
  // time). Zero gives the plain equalized drift.
  double restoring_rate = 1.0;
  // How many times an infeasible tier may be re-split with tie_tol / 10
  // before its frontends fall back to strict argmax routing.
  std::size_t split_depth = 3;
};

enum class TierEventKind { Slide, Split, Reconfigure, Boundary };

struct TierEvent {
  double time = 0.0;
  TierEventKind kind = TierEventKind::Slide;
  TierPartition partition;
};

struct FluidTrajectory {
  std::vector<double> times;
  std::vector<WorkloadVector> states;
  // Routing averaged over the integration steps that follow each sample; the
  // last sample repeats the preceding window.
  std::vector<RoutingMatrix> routing;
  std::vector<TierEvent> events;
  double step = 0.0;
  std::size_t boundary_clamps = 0;
  std::size_t fallback_steps = 0;
};

/// Per frontend, the backends whose gradient is within tie_tol of the best
/// connected gradient. Ascending indices; never empty.
std::vector<std::vector<std::size_t>> gmsr_routing_set(const BipartiteSystem& sys, const WorkloadVector& workload,
                                                       double tie_tol);

struct SlidingDrift {
  std::vector<double> drift;
  RoutingMatrix routing;
  std::vector<bool> feasible;  // per tier of the given partition
};

/// Equal-gradient drift inside each tier: v_b proportional to 1/mu''_b with
/// sum_B v_b = sum_F lambda_f - sum_B mu_b(N_b), routed over best edges.
/// Tiers whose implied inflows cannot be routed are marked infeasible and
/// filled with strict argmax values.
SlidingDrift sliding_drift(const BipartiteSystem& sys, const WorkloadVector& workload,
                           const TierPartition& partition, double tie_tol, double restoring_rate = 0.0);

FluidTrajectory integrate_fluid(const BipartiteSystem& sys, const WorkloadVector& initial, double horizon,
                                const IntegratorConfig& config = {});

/// Largest sup-norm distance between sliding and strict argmax runs over the
/// shared sample times.
double modes_agree(const BipartiteSystem& sys, const WorkloadVector& initial, double horizon, double step,
                   double tie_tol);

const char* to_string(TierEventKind kind) noexcept;
const char* to_string(IntegratorMode mode) noexcept;

}  // namespace gmsr
