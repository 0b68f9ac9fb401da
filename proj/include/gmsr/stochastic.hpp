#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "gmsr/fluid_dyn.hpp"
#include "gmsr/system.hpp"

namespace gmsr {

enum class Policy { Gmsr, Random };

const char* to_string(Policy policy) noexcept;

/// Integer job counts of the scaled discrete model; Y_b = N_b / scale.
struct DiscreteState {
  std::vector<std::int64_t> counts;
  std::uint64_t step = 0;
  std::uint64_t scale = 1;

  double normalized(std::size_t b) const { return static_cast<double>(counts[b]) / static_cast<double>(scale); }
};

/// One mt19937_64 per frontend and per backend, each seeded with
/// splitmix64(seed, stream index). Frontend f is stream f, backend b is
/// stream F + b.
class RngStreams {
 public:
  RngStreams(std::uint64_t seed, std::size_t frontends, std::size_t backends);

  std::mt19937_64& frontend(std::size_t f) { return engines_[f]; }
  std::mt19937_64& backend(std::size_t b) { return engines_[frontends_ + b]; }

 private:
  std::size_t frontends_;
  std::vector<std::mt19937_64> engines_;
};

std::uint64_t splitmix64(std::uint64_t seed, std::uint64_t stream);

struct StepRecord {
  std::vector<std::int64_t> arrivals;    // per backend
  std::vector<std::int64_t> departures;  // per backend
  std::size_t clamps = 0;                // backends whose departures hit N_b
};

/// Poisson(lambda_f) arrivals per frontend, each job routed on the state at
/// the start of the step; departures floor(m) + Bernoulli(m - floor(m)) with
/// m = mu_b(N_b / c), truncated at N_b.
void step(const BipartiteSystem& sys, DiscreteState& state, Policy policy, RngStreams& rng,
          StepRecord* record = nullptr);

struct SimulationConfig {
  std::uint64_t scale = 100;
  double horizon = 50.0;
  Policy policy = Policy::Gmsr;
  std::uint64_t seed = 0;
  std::size_t record_every = 1;
};

inline constexpr std::uint64_t kStepBudget = 100'000'000;

struct SampledRun {
  std::uint64_t seed = 0;
  std::uint64_t scale = 1;
  Policy policy = Policy::Gmsr;
  std::uint64_t steps = 0;
  std::vector<double> times;            // i / c at recorded steps
  std::vector<WorkloadVector> states;   // Y at recorded steps
  std::vector<std::vector<std::int64_t>> arrivals_at;  // cumulative arrivals at recorded steps
  std::vector<std::int64_t> arrivals;   // cumulative per backend
  std::vector<std::int64_t> departures; // cumulative per backend
  std::size_t clamp_events = 0;
  std::size_t empty_backend_steps = 0;  // (step, backend) pairs with N_b = 0
};

/// Runs floor(T c) steps from round(N0 c). Throws std::invalid_argument when
/// T c exceeds kStepBudget.
SampledRun simulate(const BipartiteSystem& sys, const WorkloadVector& initial, const SimulationConfig& config);

struct DriftEstimate {
  std::vector<double> mean;      // empirical mean of c * dY per step
  std::vector<double> std_error;
  std::vector<double> expected;  // inflow_b - mu_b(N_b) under the policy
  std::vector<double> z;
};

/// Re-sets the state to round(N c) before every sample.
DriftEstimate mean_drift_check(const BipartiteSystem& sys, const WorkloadVector& workload, std::uint64_t scale,
                               Policy policy, std::size_t samples, std::uint64_t seed);

struct FluidComparison {
  std::vector<double> deviation;             // per run, sup norm
  std::map<std::uint64_t, double> median_by_scale;
};

/// Sup-norm distance between each run's piecewise-linear interpolation and
/// the fluid samples. Throws std::invalid_argument on a horizon mismatch.
FluidComparison compare_to_fluid(const std::vector<SampledRun>& runs, const FluidTrajectory& fluid);

/// Per-backend standard deviation of Y over the recorded samples.
std::vector<double> empirical_std(const SampledRun& run);

double median(std::vector<double> values);

}  // namespace gmsr
