#include "gmsr/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "gmsr/errors.hpp"

namespace gmsr {

namespace {

constexpr double kTieTol = 1e-12;

std::vector<double> scaled_gradients(const BipartiteSystem& sys, const DiscreteState& state) {
  std::vector<double> g(sys.num_backends());
  for (std::size_t b = 0; b < g.size(); ++b) g[b] = sys.service(b).gradient(state.normalized(b));
  return g;
}

// Argmax set of frontend f, ties within kTieTol.
void best_set(const BipartiteSystem& sys, const std::vector<double>& grads, std::size_t f,
              std::vector<std::size_t>& out) {
  out.clear();
  double top = -std::numeric_limits<double>::infinity();
  for (auto b : sys.backends_of(f)) top = std::max(top, grads[b]);
  for (auto b : sys.backends_of(f)) {
    if (grads[b] >= top - kTieTol) out.push_back(b);
  }
}

std::vector<std::int64_t> initial_counts(const BipartiteSystem& sys, const WorkloadVector& workload,
                                         std::uint64_t scale) {
  require_backend_dimension(sys, workload.size(), "simulate");
  std::vector<std::int64_t> counts(workload.size());
  for (std::size_t b = 0; b < workload.size(); ++b) {
    if (!(workload[b] >= 0.0)) throw DomainError("initial workload must be nonnegative");
    counts[b] = std::llround(workload[b] * static_cast<double>(scale));
  }
  return counts;
}

}  // namespace

const char* to_string(Policy policy) noexcept { return policy == Policy::Gmsr ? "gmsr" : "random"; }

std::uint64_t splitmix64(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + (stream + 1) * 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

RngStreams::RngStreams(std::uint64_t seed, std::size_t frontends, std::size_t backends) : frontends_(frontends) {
  engines_.reserve(frontends + backends);
  for (std::size_t k = 0; k < frontends + backends; ++k) engines_.emplace_back(splitmix64(seed, k));
}

void step(const BipartiteSystem& sys, DiscreteState& state, Policy policy, RngStreams& rng, StepRecord* record) {
  const std::size_t nb = sys.num_backends();
  if (state.counts.size() != nb) throw DimensionError("discrete state does not match the backend count");
  std::vector<std::int64_t> arrivals(nb, 0);
  std::vector<std::int64_t> departures(nb, 0);
  const auto grads = scaled_gradients(sys, state);
  std::vector<std::size_t> ties;

  for (std::size_t f = 0; f < sys.num_frontends(); ++f) {
    const double lambda = sys.lambda(f);
    if (lambda <= 0.0) continue;
    auto& eng = rng.frontend(f);
    const auto jobs = std::poisson_distribution<std::int64_t>(lambda)(eng);
    if (jobs == 0) continue;
    if (policy == Policy::Gmsr) {
      best_set(sys, grads, f, ties);
    } else {
      ties.assign(sys.backends_of(f).begin(), sys.backends_of(f).end());
    }
    if (ties.size() == 1) {
      arrivals[ties.front()] += jobs;
      continue;
    }
    std::uniform_int_distribution<std::size_t> pick(0, ties.size() - 1);
    for (std::int64_t j = 0; j < jobs; ++j) ++arrivals[ties[pick(eng)]];
  }

  std::size_t clamps = 0;
  for (std::size_t b = 0; b < nb; ++b) {
    const double m = sys.service(b).rate(state.normalized(b));
    const double whole = std::floor(m);
    auto& eng = rng.backend(b);
    std::int64_t d = static_cast<std::int64_t>(whole);
    if (std::bernoulli_distribution(m - whole)(eng)) ++d;
    if (d > state.counts[b]) {
      d = state.counts[b];
      ++clamps;
    }
    departures[b] = d;
  }

  for (std::size_t b = 0; b < nb; ++b) state.counts[b] += arrivals[b] - departures[b];
  ++state.step;
  if (record != nullptr) {
    record->arrivals = std::move(arrivals);
    record->departures = std::move(departures);
    record->clamps = clamps;
  }
}

SampledRun simulate(const BipartiteSystem& sys, const WorkloadVector& initial, const SimulationConfig& config) {
  if (config.scale == 0) throw std::invalid_argument("scale must be a positive integer");
  if (!(config.horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  if (config.record_every == 0) throw std::invalid_argument("record_every must be at least 1");
  const double c = static_cast<double>(config.scale);
  if (config.horizon * c > static_cast<double>(kStepBudget)) {
    throw std::invalid_argument("simulation needs " + std::to_string(config.horizon * c) +
                                " steps, budget is " + std::to_string(kStepBudget));
  }
  const auto steps = static_cast<std::uint64_t>(std::floor(config.horizon * c + 1e-9));
  const std::size_t nb = sys.num_backends();

  SampledRun run;
  run.seed = config.seed;
  run.scale = config.scale;
  run.policy = config.policy;
  run.steps = steps;
  run.arrivals.assign(nb, 0);
  run.departures.assign(nb, 0);

  DiscreteState state{initial_counts(sys, initial, config.scale), 0, config.scale};
  RngStreams rng(config.seed, sys.num_frontends(), nb);
  StepRecord rec;
  auto capture = [&] {
    run.times.push_back(static_cast<double>(state.step) / c);
    WorkloadVector y(nb);
    for (std::size_t b = 0; b < nb; ++b) y[b] = state.normalized(b);
    run.states.push_back(std::move(y));
    run.arrivals_at.push_back(run.arrivals);
  };

  capture();
  for (std::uint64_t i = 0; i < steps; ++i) {
    for (std::size_t b = 0; b < nb; ++b) {
      if (state.counts[b] == 0) ++run.empty_backend_steps;
    }
    step(sys, state, config.policy, rng, &rec);
    for (std::size_t b = 0; b < nb; ++b) {
      run.arrivals[b] += rec.arrivals[b];
      run.departures[b] += rec.departures[b];
    }
    run.clamp_events += rec.clamps;
    if ((i + 1) % config.record_every == 0 || i + 1 == steps) capture();
  }
  return run;
}

DriftEstimate mean_drift_check(const BipartiteSystem& sys, const WorkloadVector& workload, std::uint64_t scale,
                               Policy policy, std::size_t samples, std::uint64_t seed) {
  if (samples < 2) throw std::invalid_argument("need at least two samples");
  if (scale == 0) throw std::invalid_argument("scale must be a positive integer");
  const std::size_t nb = sys.num_backends();
  const auto counts = initial_counts(sys, workload, scale);
  DiscreteState frozen{counts, 0, scale};

  DriftEstimate est;
  est.expected.assign(nb, 0.0);
  const auto grads = scaled_gradients(sys, frozen);
  std::vector<std::size_t> ties;
  for (std::size_t f = 0; f < sys.num_frontends(); ++f) {
    if (policy == Policy::Gmsr) {
      best_set(sys, grads, f, ties);
    } else {
      ties.assign(sys.backends_of(f).begin(), sys.backends_of(f).end());
    }
    for (auto b : ties) est.expected[b] += sys.lambda(f) / static_cast<double>(ties.size());
  }
  for (std::size_t b = 0; b < nb; ++b) {
    const double m = sys.service(b).rate(frozen.normalized(b));
    // Departures are truncated at N_b, so the mean is E[min(D, N_b)].
    const double whole = std::floor(m);
    const double frac = m - whole;
    const auto n = static_cast<double>(counts[b]);
    const double mean_departures = (1.0 - frac) * std::min(whole, n) + frac * std::min(whole + 1.0, n);
    est.expected[b] -= mean_departures;
  }

  RngStreams rng(seed, sys.num_frontends(), nb);
  std::vector<double> sum(nb, 0.0);
  std::vector<double> sum_sq(nb, 0.0);
  StepRecord rec;
  for (std::size_t s = 0; s < samples; ++s) {
    DiscreteState state = frozen;
    step(sys, state, policy, rng, &rec);
    for (std::size_t b = 0; b < nb; ++b) {
      const auto d = static_cast<double>(rec.arrivals[b] - rec.departures[b]);
      sum[b] += d;
      sum_sq[b] += d * d;
    }
  }
  const auto n = static_cast<double>(samples);
  for (std::size_t b = 0; b < nb; ++b) {
    const double mean = sum[b] / n;
    const double var = std::max(0.0, (sum_sq[b] - n * mean * mean) / (n - 1.0));
    const double se = std::sqrt(var / n);
    est.mean.push_back(mean);
    est.std_error.push_back(se);
    const double gap = mean - est.expected[b];
    est.z.push_back(se > 0.0 ? gap / se : (gap == 0.0 ? 0.0 : std::copysign(INFINITY, gap)));
  }
  return est;
}

FluidComparison compare_to_fluid(const std::vector<SampledRun>& runs, const FluidTrajectory& fluid) {
  if (fluid.times.empty()) throw std::invalid_argument("fluid trajectory is empty");
  FluidComparison out;
  std::map<std::uint64_t, std::vector<double>> by_scale;
  const double fluid_end = fluid.times.back();
  for (const auto& run : runs) {
    if (run.times.empty()) throw std::invalid_argument("sampled run is empty");
    const double slack = std::max(1.0 / static_cast<double>(run.scale), fluid.step) + 1e-9;
    if (std::abs(run.times.back() - fluid_end) > slack) {
      throw std::invalid_argument("run horizon " + std::to_string(run.times.back()) +
                                  " does not match fluid horizon " + std::to_string(fluid_end));
    }
    double worst = 0.0;
    std::size_t seg = 0;
    for (std::size_t k = 0; k < fluid.times.size(); ++k) {
      const double t = std::min(fluid.times[k], run.times.back());
      while (seg + 1 < run.times.size() && run.times[seg + 1] < t) ++seg;
      const std::size_t next = std::min(seg + 1, run.times.size() - 1);
      const double span = run.times[next] - run.times[seg];
      const double a = span > 0.0 ? std::clamp((t - run.times[seg]) / span, 0.0, 1.0) : 0.0;
      for (std::size_t b = 0; b < fluid.states[k].size(); ++b) {
        const double y = (1.0 - a) * run.states[seg][b] + a * run.states[next][b];
        worst = std::max(worst, std::abs(y - fluid.states[k][b]));
      }
    }
    out.deviation.push_back(worst);
    by_scale[run.scale].push_back(worst);
  }
  for (auto& [scale, devs] : by_scale) out.median_by_scale[scale] = median(devs);
  return out;
}

std::vector<double> empirical_std(const SampledRun& run) {
  if (run.states.size() < 2) throw std::invalid_argument("need at least two samples");
  const std::size_t nb = run.states.front().size();
  std::vector<double> out(nb);
  const auto n = static_cast<double>(run.states.size());
  for (std::size_t b = 0; b < nb; ++b) {
    double mean = 0.0;
    for (const auto& y : run.states) mean += y[b];
    mean /= n;
    double var = 0.0;
    for (const auto& y : run.states) var += (y[b] - mean) * (y[b] - mean);
    out[b] = std::sqrt(var / (n - 1.0));
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

}  // namespace gmsr
