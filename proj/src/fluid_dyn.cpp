#include "gmsr/fluid_dyn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "gmsr/errors.hpp"
#include "gmsr/flownet.hpp"

namespace gmsr {

namespace {

std::size_t argmax_backend(const BipartiteSystem& sys, const std::vector<double>& grads, std::size_t f) {
  const auto bs = sys.backends_of(f);
  std::size_t best = bs.front();
  for (auto b : bs) {
    if (grads[b] > grads[best]) best = b;
  }
  return best;
}

// Shared state for drift evaluation at one workload.
struct DriftContext {
  const BipartiteSystem& sys;
  const WorkloadVector& workload;
  const std::vector<double>& grads;
  const std::vector<double>& rates;
  double restoring_rate;
};

void strict_tier(const DriftContext& ctx, const Tier& tier, std::vector<double>& drift, RoutingMatrix& x) {
  for (auto b : tier.backends) drift[b] = -ctx.rates[b];
  for (auto f : tier.frontends) {
    for (auto b : ctx.sys.backends_of(f)) x(f, b) = 0.0;
    const auto b = argmax_backend(ctx.sys, ctx.grads, f);
    x(f, b) = 1.0;
    drift[b] += ctx.sys.lambda(f);
  }
}

// Equalized drift for one tier. Writes drift and routing for the tier's nodes
// and returns false when the implied inflows are not routable.
bool slide_tier(const DriftContext& ctx, const Tier& tier, double tie_tol, std::vector<double>& drift,
                RoutingMatrix& x) {
  const auto& sys = ctx.sys;
  double imbalance = 0.0;
  for (auto f : tier.frontends) imbalance += sys.lambda(f);
  for (auto b : tier.backends) imbalance -= ctx.rates[b];

  if (tier.backends.size() == 1) {
    const auto b = tier.backends.front();
    drift[b] = imbalance;
    for (auto f : tier.frontends) {
      for (auto j : sys.backends_of(f)) x(f, j) = 0.0;
      x(f, b) = 1.0;
    }
    return true;
  }

  const std::size_t nb = tier.backends.size();
  std::vector<double> inv_curv(nb);
  double sum_inv = 0.0;
  double mean_grad = 0.0;
  for (std::size_t k = 0; k < nb; ++k) {
    const auto b = tier.backends[k];
    inv_curv[k] = 1.0 / sys.service(b).curvature(ctx.workload[b]);
    sum_inv += inv_curv[k];
    mean_grad += ctx.grads[b];
  }
  mean_grad /= static_cast<double>(nb);
  // mu''_b v_b = c + r (mean - g_b) with sum_b v_b = imbalance.
  double pull = 0.0;
  for (std::size_t k = 0; k < nb; ++k) {
    pull += ctx.restoring_rate * (mean_grad - ctx.grads[tier.backends[k]]) * inv_curv[k];
  }
  const double common = (imbalance - pull) / sum_inv;

  double supply_total = 0.0;
  for (auto f : tier.frontends) supply_total += sys.lambda(f);
  const double slack = 1e-12 * (1.0 + supply_total);
  std::vector<double> demand(nb);
  for (std::size_t k = 0; k < nb; ++k) {
    const auto b = tier.backends[k];
    const double v = (common + ctx.restoring_rate * (mean_grad - ctx.grads[b])) * inv_curv[k];
    const double w = v + ctx.rates[b];
    if (w < -slack) return false;
    demand[k] = std::max(0.0, w);
  }

  std::vector<std::size_t> local(sys.num_backends(), std::numeric_limits<std::size_t>::max());
  for (std::size_t k = 0; k < nb; ++k) local[tier.backends[k]] = k;
  std::vector<double> supply;
  std::vector<Edge> edges;
  std::vector<Edge> global;
  for (std::size_t i = 0; i < tier.frontends.size(); ++i) {
    const auto f = tier.frontends[i];
    supply.push_back(sys.lambda(f));
    double top = -std::numeric_limits<double>::infinity();
    for (auto b : sys.backends_of(f)) top = std::max(top, ctx.grads[b]);
    for (auto b : sys.backends_of(f)) {
      if (local[b] != std::numeric_limits<std::size_t>::max() && ctx.grads[b] >= top - tie_tol) {
        edges.push_back({i, local[b]});
        global.push_back({f, b});
      }
    }
  }
  std::vector<double> shares;
  if (!transport_shares(supply, demand, edges, shares)) return false;

  for (auto f : tier.frontends) {
    for (auto b : sys.backends_of(f)) x(f, b) = 0.0;
  }
  for (std::size_t k = 0; k < global.size(); ++k) x(global[k].frontend, global[k].backend) = shares[k];
  for (std::size_t k = 0; k < nb; ++k) drift[tier.backends[k]] = demand[k] - ctx.rates[tier.backends[k]];
  return true;
}

// Slides the tier if possible, otherwise re-splits it with a tighter band and
// recurses; strict argmax once the depth budget is spent.
bool tier_drift(const DriftContext& ctx, const Tier& tier, double tie_tol, std::size_t depth_left,
                std::vector<double>& drift, RoutingMatrix& x) {
  if (slide_tier(ctx, tier, tie_tol, drift, x)) return true;
  if (depth_left == 0) {
    strict_tier(ctx, tier, drift, x);
    return false;
  }
  const double finer = tie_tol / 10.0;
  const auto sub = compute_tiers(ctx.sys, ctx.grads, finer, tier);
  bool ok = true;
  for (const auto& piece : sub.tiers) ok = tier_drift(ctx, piece, finer, depth_left - 1, drift, x) && ok;
  return ok;
}

bool same_nodes(const TierPartition& a, const TierPartition& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].frontends != b[i].frontends || a[i].backends != b[i].backends) return false;
  }
  return true;
}

// True when every tier of next sits inside a single tier of prev.
bool refines(const BipartiteSystem& sys, const TierPartition& prev, const TierPartition& next) {
  if (next.size() <= prev.size()) return false;
  const auto m = tier_membership(sys, prev);
  for (const auto& tier : next.tiers) {
    std::size_t home = std::numeric_limits<std::size_t>::max();
    auto check = [&](std::size_t t) {
      if (home == std::numeric_limits<std::size_t>::max()) home = t;
      return home == t;
    };
    for (auto f : tier.frontends) {
      if (!check(m.of_frontend[f])) return false;
    }
    for (auto b : tier.backends) {
      if (!check(m.of_backend[b])) return false;
    }
  }
  return true;
}

void check_initial(const BipartiteSystem& sys, const WorkloadVector& initial, double horizon,
                   const IntegratorConfig& config) {
  require_backend_dimension(sys, initial.size(), "integrate_fluid");
  for (double n : initial) {
    if (!(n >= 0.0) || !std::isfinite(n)) throw DomainError("initial workload must be finite and nonnegative");
  }
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  if (!(config.step > 0.0)) throw std::invalid_argument("integrator step must be positive");
  if (!(config.tie_tol > 0.0)) throw std::invalid_argument("tie tolerance must be positive");
  if (config.record_every == 0) throw std::invalid_argument("record_every must be at least 1");
}

}  // namespace

const char* to_string(TierEventKind kind) noexcept {
  switch (kind) {
    case TierEventKind::Slide: return "slide";
    case TierEventKind::Split: return "split";
    case TierEventKind::Reconfigure: return "reconfigure";
    case TierEventKind::Boundary: return "boundary";
  }
  return "?";
}

const char* to_string(IntegratorMode mode) noexcept {
  return mode == IntegratorMode::Sliding ? "sliding" : "strict-argmax";
}

std::vector<std::vector<std::size_t>> gmsr_routing_set(const BipartiteSystem& sys, const WorkloadVector& workload,
                                                       double tie_tol) {
  const auto grads = gradients(sys, workload);
  std::vector<std::vector<std::size_t>> sets(sys.num_frontends());
  for (const auto& e : best_backend_graph(sys, grads, tie_tol)) sets[e.frontend].push_back(e.backend);
  return sets;
}

SlidingDrift sliding_drift(const BipartiteSystem& sys, const WorkloadVector& workload,
                           const TierPartition& partition, double tie_tol, double restoring_rate) {
  require_backend_dimension(sys, workload.size(), "sliding_drift");
  tier_membership(sys, partition);
  const auto grads = gradients(sys, workload);
  const auto rates = service_rates(sys, workload);
  const DriftContext ctx{sys, workload, grads, rates, restoring_rate};

  SlidingDrift out{std::vector<double>(sys.num_backends(), 0.0),
                   RoutingMatrix(sys.num_frontends(), sys.num_backends()), {}};
  for (const auto& tier : partition.tiers) {
    const bool ok = slide_tier(ctx, tier, tie_tol, out.drift, out.routing);
    if (!ok) strict_tier(ctx, tier, out.drift, out.routing);
    out.feasible.push_back(ok);
  }
  return out;
}

FluidTrajectory integrate_fluid(const BipartiteSystem& sys, const WorkloadVector& initial, double horizon,
                                const IntegratorConfig& config) {
  check_initial(sys, initial, horizon, config);
  const std::size_t nb = sys.num_backends();
  const std::size_t nf = sys.num_frontends();
  const double h = config.step;
  const auto steps = static_cast<std::size_t>(std::llround(horizon / h));

  FluidTrajectory traj;
  traj.step = h;
  WorkloadVector state = initial;
  std::vector<double> grads(nb);
  std::vector<double> rates(nb);
  std::vector<double> drift(nb);
  RoutingMatrix x(nf, nb);
  RoutingMatrix window(nf, nb);
  std::size_t window_len = 0;
  TierPartition previous;
  bool was_clamped = false;

  auto evaluate = [&](double t) {
    for (std::size_t b = 0; b < nb; ++b) {
      grads[b] = sys.service(b).gradient(state[b]);
      rates[b] = sys.service(b).rate(state[b]);
    }
    auto partition = compute_tiers(sys, grads, config.tie_tol);
    if (traj.events.empty()) {
      traj.events.push_back({t, TierEventKind::Slide, partition});
    } else if (!same_nodes(previous, partition)) {
      const auto kind = refines(sys, previous, partition) ? TierEventKind::Split : TierEventKind::Reconfigure;
      traj.events.push_back({t, kind, partition});
    }

    std::fill(drift.begin(), drift.end(), 0.0);
    const DriftContext ctx{sys, state, grads, rates, config.restoring_rate};
    if (config.mode == IntegratorMode::Sliding) {
      bool ok = true;
      for (const auto& tier : partition.tiers) {
        ok = tier_drift(ctx, tier, config.tie_tol, config.split_depth, drift, x) && ok;
      }
      if (!ok) ++traj.fallback_steps;
    } else {
      for (std::size_t b = 0; b < nb; ++b) drift[b] = -rates[b];
      for (std::size_t f = 0; f < nf; ++f) {
        for (auto b : sys.backends_of(f)) x(f, b) = 0.0;
        const auto b = argmax_backend(sys, grads, f);
        x(f, b) = 1.0;
        drift[b] += sys.lambda(f);
      }
    }
    previous = std::move(partition);
  };

  auto flush_window = [&] {
    RoutingMatrix avg(nf, nb);
    for (const auto& e : sys.edges()) {
      avg(e.frontend, e.backend) = window(e.frontend, e.backend) / static_cast<double>(window_len);
      window(e.frontend, e.backend) = 0.0;
    }
    traj.routing.push_back(std::move(avg));
    window_len = 0;
  };

  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * h;
    if (k % config.record_every == 0) {
      if (k > 0) flush_window();
      traj.times.push_back(t);
      traj.states.push_back(state);
    }
    evaluate(t);
    for (const auto& e : sys.edges()) window(e.frontend, e.backend) += x(e.frontend, e.backend);
    ++window_len;

    bool clamped = false;
    for (std::size_t b = 0; b < nb; ++b) {
      const double next = state[b] + h * drift[b];
      if (!std::isfinite(next)) {
        throw IntegrationError("non-finite workload on backend '" + sys.backend(b).id + "' at t=" +
                               std::to_string(t));
      }
      if (next < 0.0) {
        clamped = true;
        ++traj.boundary_clamps;
        state[b] = 0.0;
      } else {
        state[b] = next;
      }
    }
    if (clamped && !was_clamped) traj.events.push_back({t + h, TierEventKind::Boundary, previous});
    was_clamped = clamped;
  }

  if (window_len > 0) flush_window();
  const double t_end = static_cast<double>(steps) * h;
  evaluate(t_end);
  traj.times.push_back(t_end);
  traj.states.push_back(state);
  // An instantaneous strict argmax row is a vertex of the routing set, not the
  // velocity actually realized; reuse the last window when there is one.
  traj.routing.push_back(traj.routing.empty() ? x : traj.routing.back());
  return traj;
}

double modes_agree(const BipartiteSystem& sys, const WorkloadVector& initial, double horizon, double step,
                   double tie_tol) {
  IntegratorConfig cfg;
  cfg.step = step;
  cfg.tie_tol = tie_tol;
  cfg.mode = IntegratorMode::Sliding;
  const auto sliding = integrate_fluid(sys, initial, horizon, cfg);
  cfg.mode = IntegratorMode::StrictArgmax;
  const auto strict = integrate_fluid(sys, initial, horizon, cfg);
  double gap = 0.0;
  const std::size_t n = std::min(sliding.states.size(), strict.states.size());
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t b = 0; b < sys.num_backends(); ++b) {
      gap = std::max(gap, std::abs(sliding.states[k][b] - strict.states[k][b]));
    }
  }
  return gap;
}

}  // namespace gmsr
