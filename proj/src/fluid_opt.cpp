#include "gmsr/fluid_opt.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include "gmsr/errors.hpp"

namespace gmsr {

namespace {

constexpr double kSupport = 1e-8;
constexpr double kSaturationGuard = 1e-9;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string sci(double v) {
  std::ostringstream out;
  out << v;
  return out.str();
}

std::vector<std::string> frontend_ids(const BipartiteSystem& sys, const std::vector<std::size_t>& fs) {
  std::vector<std::string> ids;
  for (auto f : fs) ids.push_back(sys.frontend(f).id);
  return ids;
}

void require_feasible(const BipartiteSystem& sys) {
  const auto stuck = infeasible_frontends(sys);
  if (!stuck.empty()) {
    auto ids = frontend_ids(sys, stuck);
    std::string list;
    for (const auto& id : ids) list += (list.empty() ? "" : ",") + id;
    throw InfeasibleError("fluid problem is infeasible: frontends {" + list +
                              "} exceed the capacity of their backends",
                          std::move(ids));
  }
}

void fill_inflows(const BipartiteSystem& sys, const RoutingMatrix& x, std::vector<double>& w) {
  std::fill(w.begin(), w.end(), 0.0);
  for (const auto& e : sys.edges()) w[e.backend] += sys.lambda(e.frontend) * x(e.frontend, e.backend);
}

// Sum of mu_b^{-1}(w_b); +infinity once an inflow passes its saturation guard.
double workload_objective(const BipartiteSystem& sys, const std::vector<double>& w,
                          const std::vector<double>& limit) {
  double total = 0.0;
  for (std::size_t b = 0; b < w.size(); ++b) {
    if (w[b] > limit[b]) return kInf;
    total += sys.service(b).inverse_rate(std::max(0.0, w[b]));
  }
  return total;
}

// Second derivative of w -> mu^{-1}(w).
double inverse_curvature(const ServiceRateFn& fn, double w) {
  const double n = fn.inverse_rate(std::max(0.0, w));
  const double g = fn.gradient(n);
  return -fn.curvature(n) / (g * g * g);
}

// Idle frontends do not move any flow; park them on their best backend so
// the optimality conditions hold row by row.
void park_idle_rows(const BipartiteSystem& sys, const WorkloadVector& workload, RoutingMatrix& x) {
  for (std::size_t f = 0; f < sys.num_frontends(); ++f) {
    if (sys.lambda(f) > 0.0) continue;
    std::size_t best = sys.backends_of(f).front();
    double top = -kInf;
    for (auto b : sys.backends_of(f)) {
      const double g = sys.service(b).gradient(workload[b]);
      if (g > top) {
        top = g;
        best = b;
      }
    }
    for (auto b : sys.backends_of(f)) x(f, b) = 0.0;
    x(f, best) = 1.0;
  }
}

RoutingMatrix interior_start(const BipartiteSystem& sys, const std::vector<double>& limit) {
  const double total = sys.total_arrival_rate();
  const auto caps = sys.capacities();
  auto routed_flow = [&](double theta) {
    std::vector<double> scaled(caps.size());
    for (std::size_t b = 0; b < caps.size(); ++b) scaled[b] = theta * caps[b];
    auto aug = augmented_network(sys, scaled);
    auto mf = max_flow(aug.network);
    return std::pair{std::move(aug), std::move(mf)};
  };
  auto routes_all = [&](double theta) {
    return std::abs(routed_flow(theta).second.value - total) <= 1e-12 * (1.0 + total);
  };

  double lo = 0.0;
  double hi = 1.0;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (routes_all(mid) ? hi : lo) = mid;
  }
  const double theta = 0.5 * (hi + 1.0);
  const auto [aug, mf] = routed_flow(theta);

  RoutingMatrix flow_x(sys.num_frontends(), sys.num_backends());
  RoutingMatrix uniform(sys.num_frontends(), sys.num_backends());
  for (std::size_t f = 0; f < sys.num_frontends(); ++f) {
    const auto bs = sys.backends_of(f);
    for (auto b : bs) uniform(f, b) = 1.0 / static_cast<double>(bs.size());
  }
  const auto edges = sys.edges();
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const auto [f, b] = edges[k];
    if (sys.lambda(f) > 0.0) flow_x(f, b) = mf.flow[aug.edge_arc[k]] / sys.lambda(f);
  }
  for (std::size_t f = 0; f < sys.num_frontends(); ++f) {
    double sum = 0.0;
    for (auto b : sys.backends_of(f)) sum += flow_x(f, b);
    for (auto b : sys.backends_of(f)) flow_x(f, b) = sum > 0.0 ? flow_x(f, b) / sum : uniform(f, b);
  }

  std::vector<double> w(sys.num_backends());
  for (double mix = 0.5; mix > 1e-300; mix *= 0.5) {
    RoutingMatrix x(sys.num_frontends(), sys.num_backends());
    for (const auto& e : edges) {
      x(e.frontend, e.backend) = (1.0 - mix) * flow_x(e.frontend, e.backend) + mix * uniform(e.frontend, e.backend);
    }
    fill_inflows(sys, x, w);
    if (std::isfinite(workload_objective(sys, w, limit))) return x;
  }
  throw ConvergenceError("could not construct an interior starting routing");
}

FluidOptimum finish(const BipartiteSystem& sys, RoutingMatrix x, const std::vector<double>& w) {
  FluidOptimum opt;
  opt.workload.resize(sys.num_backends());
  for (std::size_t b = 0; b < w.size(); ++b) opt.workload[b] = sys.service(b).inverse_rate(std::max(0.0, w[b]));
  park_idle_rows(sys, opt.workload, x);
  opt.routing = std::move(x);
  opt.objective = 0.0;
  for (double n : opt.workload) opt.objective += n;
  opt.kkt_residual = kkt_residual(sys, opt.workload, opt.routing);
  return opt;
}

// Guess the support from x, give every connected block of it one common
// gradient level fixed by flow balance, and re-route exactly. Returns nothing
// when the guessed support cannot carry the implied inflows.
std::optional<FluidOptimum> polish(const BipartiteSystem& sys, const RoutingMatrix& x, double threshold) {
  const std::size_t nf = sys.num_frontends();
  const std::size_t nb = sys.num_backends();
  std::vector<std::size_t> parent(nf + nb);
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = i;
  std::function<std::size_t(std::size_t)> root = [&](std::size_t i) {
    return parent[i] == i ? i : parent[i] = root(parent[i]);
  };
  std::vector<Edge> support;
  for (const auto& e : sys.edges()) {
    if (sys.lambda(e.frontend) > 0.0 && x(e.frontend, e.backend) > threshold) {
      parent[root(e.frontend)] = root(nf + e.backend);
      support.push_back(e);
    }
  }

  WorkloadVector n(nb, 0.0);
  std::vector<bool> done(nf + nb, false);
  for (std::size_t f = 0; f < nf; ++f) {
    if (sys.lambda(f) <= 0.0) continue;
    const auto r = root(f);
    if (done[r]) continue;
    done[r] = true;
    double load = 0.0;
    for (std::size_t j = 0; j < nf; ++j) {
      if (sys.lambda(j) > 0.0 && root(j) == r) load += sys.lambda(j);
    }
    std::vector<std::size_t> bs;
    double top = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
      if (root(nf + b) == r) {
        bs.push_back(b);
        top = std::max(top, sys.service(b).max_gradient());
      }
    }
    auto level = [&](const ServiceRateFn& fn, double g) { return g >= fn.max_gradient() ? 0.0 : fn.inverse_gradient(g); };
    auto excess = [&](double g) {
      double s = -load;
      for (auto b : bs) s += sys.service(b).rate(level(sys.service(b), g));
      return s;
    };
    double hi = top;
    double lo = top;
    int halvings = 0;
    while (excess(lo) <= 0.0) {
      lo *= 0.5;
      if (++halvings > 2000) return std::nullopt;
    }
    for (int i = 0; i < 200 && hi - lo > 1e-17 * hi; ++i) {
      const double mid = 0.5 * (lo + hi);
      (excess(mid) > 0.0 ? lo : hi) = mid;
    }
    for (auto b : bs) n[b] = level(sys.service(b), 0.5 * (lo + hi));
  }

  std::vector<double> supply(nf, 0.0);
  std::vector<double> demand(nb, 0.0);
  for (std::size_t f = 0; f < nf; ++f) supply[f] = sys.lambda(f);
  for (std::size_t b = 0; b < nb; ++b) demand[b] = sys.service(b).rate(n[b]);
  // Rebalance the tiny bisection leftover so the totals match exactly.
  double total_supply = 0.0;
  double total_demand = 0.0;
  for (double s : supply) total_supply += s;
  for (double d : demand) total_demand += d;
  if (total_demand <= 0.0) return std::nullopt;
  for (auto& d : demand) d *= total_supply / total_demand;

  std::vector<Edge> edges = support;
  for (std::size_t f = 0; f < nf; ++f) {
    if (sys.lambda(f) <= 0.0) edges.push_back({f, sys.backends_of(f).front()});
  }
  std::vector<double> shares;
  if (!transport_shares(supply, demand, edges, shares)) return std::nullopt;
  RoutingMatrix routed(nf, nb);
  for (std::size_t k = 0; k < edges.size(); ++k) routed(edges[k].frontend, edges[k].backend) = shares[k];
  park_idle_rows(sys, n, routed);

  FluidOptimum opt;
  opt.workload = std::move(n);
  opt.routing = std::move(routed);
  for (double v : opt.workload) opt.objective += v;
  opt.kkt_residual = kkt_residual(sys, opt.workload, opt.routing);
  return opt;
}

}  // namespace

double kkt_residual(const BipartiteSystem& sys, const WorkloadVector& workload, const RoutingMatrix& x) {
  require_backend_dimension(sys, workload.size(), "kkt_residual");
  require_routing_dimension(sys, x, "kkt_residual");
  const auto grads = gradients(sys, workload);

  double routing_gap = 0.0;
  for (std::size_t f = 0; f < sys.num_frontends(); ++f) {
    double hi = -kInf;
    double lo = kInf;
    double unsupported = -kInf;
    for (auto b : sys.backends_of(f)) {
      if (x(f, b) > kSupport) {
        hi = std::max(hi, grads[b]);
        lo = std::min(lo, grads[b]);
      } else {
        unsupported = std::max(unsupported, grads[b]);
      }
    }
    if (hi == -kInf) continue;
    routing_gap = std::max(routing_gap, (hi - lo) + std::max(0.0, unsupported - hi));
  }

  const auto w = inflows(sys, x);
  double balance = 0.0;
  for (std::size_t b = 0; b < w.size(); ++b) {
    balance = std::max(balance, std::abs(w[b] - sys.service(b).rate(workload[b])));
  }
  return routing_gap + balance;
}

FluidOptimum solve_fluid_optimum(const BipartiteSystem& sys, const FluidSolveOptions& options) {
  require_feasible(sys);
  const std::size_t nb = sys.num_backends();
  std::vector<double> limit(nb);
  for (std::size_t b = 0; b < nb; ++b) limit[b] = (1.0 - kSaturationGuard) * sys.service(b).cap();

  std::vector<double> w(nb);
  if (sys.total_arrival_rate() == 0.0) {
    RoutingMatrix x(sys.num_frontends(), nb);
    for (std::size_t f = 0; f < sys.num_frontends(); ++f) x(f, sys.backends_of(f).front()) = 1.0;
    return finish(sys, std::move(x), w);
  }

  RoutingMatrix x = options.initial ? *options.initial : interior_start(sys, limit);
  require_routing_dimension(sys, x, "solve_fluid_optimum");
  fill_inflows(sys, x, w);
  double phi = workload_objective(sys, w, limit);
  if (!std::isfinite(phi)) {
    throw std::invalid_argument("initial routing saturates a backend");
  }

  std::vector<std::size_t> movable;
  for (std::size_t f = 0; f < sys.num_frontends(); ++f) {
    if (sys.lambda(f) > 0.0 && sys.backends_of(f).size() > 1) movable.push_back(f);
  }

  // Step 0.5/L with L = max_b (mu_b^{-1})''(w_b) * sum_f lambda_f^2, adapted by
  // halving on any objective increase and mild growth after accepted steps.
  double lambda_sq = 0.0;
  for (auto f : movable) lambda_sq += sys.lambda(f) * sys.lambda(f);
  double curv = 0.0;
  for (std::size_t b = 0; b < nb; ++b) curv = std::max(curv, inverse_curvature(sys.service(b), w[b]));
  double eta = lambda_sq > 0.0 && curv > 0.0 ? 0.5 / (curv * lambda_sq) : 1.0;

  FluidOptimum best;
  std::vector<double> slope(nb);
  std::vector<double> trial_w(nb);
  RoutingMatrix trial = x;
  std::size_t it = 0;
  for (;; ++it) {
    if (options.record_history) best.objective_history.push_back(phi);
    FluidOptimum current = finish(sys, x, w);
    if (current.kkt_residual <= options.tol || movable.empty()) {
      current.iterations = it;
      current.objective_history = std::move(best.objective_history);
      return current;
    }
    // Mirror descent is slow to empty coordinates whose gradient gap is
    // small; once the support is roughly settled, try solving on it directly.
    if ((it % 25 == 0 && current.kkt_residual < 1e-3) || it >= options.max_iterations) {
      for (double thr : {1e-3, 1e-5, 1e-7}) {
        auto cand = polish(sys, x, thr);
        if (cand && cand->kkt_residual <= options.tol) {
          cand->iterations = it;
          cand->objective_history = std::move(best.objective_history);
          return *cand;
        }
      }
    }
    if (it >= options.max_iterations) {
      throw ConvergenceError("fluid optimum did not reach kkt residual " + sci(options.tol) +
                             " within " + std::to_string(options.max_iterations) + " iterations (at " +
                             sci(current.kkt_residual) + ")");
    }

    // d/dw_b mu_b^{-1}(w_b) = 1 / mu_b'(N_b)
    for (std::size_t b = 0; b < nb; ++b) slope[b] = 1.0 / sys.service(b).gradient(current.workload[b]);

    bool accepted = false;
    while (!accepted) {
      trial = x;
      for (auto f : movable) {
        const auto bs = sys.backends_of(f);
        double low = kInf;
        for (auto b : bs) low = std::min(low, slope[b]);
        double sum = 0.0;
        for (auto b : bs) {
          trial(f, b) = x(f, b) * std::exp(-eta * sys.lambda(f) * (slope[b] - low));
          sum += trial(f, b);
        }
        for (auto b : bs) trial(f, b) /= sum;
      }
      fill_inflows(sys, trial, trial_w);
      const double trial_phi = workload_objective(sys, trial_w, limit);
      if (trial_phi <= phi + 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(phi))) {
        accepted = true;
        x = trial;
        w = trial_w;
        phi = std::min(phi, trial_phi);
        eta *= 1.25;
      } else {
        eta *= 0.5;
        if (eta < 1e-300) {
          throw ConvergenceError("fluid optimum step size collapsed at kkt residual " +
                                 sci(current.kkt_residual));
        }
      }
    }
  }
}

FluidOptimum brute_force_optimum(const BipartiteSystem& sys, double grid_step) {
  if (!(grid_step > 0.0) || grid_step > 1.0) {
    throw std::invalid_argument("grid step must lie in (0, 1]");
  }
  std::vector<std::size_t> free_rows;
  std::size_t dims = 0;
  for (std::size_t f = 0; f < sys.num_frontends(); ++f) {
    const auto deg = sys.backends_of(f).size();
    if (sys.lambda(f) > 0.0 && deg > 1) {
      free_rows.push_back(f);
      dims += deg - 1;
    }
  }
  if (dims > 2) {
    throw std::invalid_argument("brute force supports at most two free routing coordinates, system has " +
                                std::to_string(dims));
  }
  const auto n = static_cast<long>(std::llround(1.0 / grid_step));

  RoutingMatrix x(sys.num_frontends(), sys.num_backends());
  for (std::size_t f = 0; f < sys.num_frontends(); ++f) {
    const auto bs = sys.backends_of(f);
    for (auto b : bs) x(f, b) = 1.0 / static_cast<double>(bs.size());
  }

  const std::size_t nb = sys.num_backends();
  std::vector<double> caps = sys.capacities();
  std::vector<double> w(nb);
  double best_phi = kInf;
  RoutingMatrix best_x = x;

  auto evaluate = [&] {
    fill_inflows(sys, x, w);
    double total = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
      if (w[b] >= caps[b]) return;
      total += sys.service(b).inverse_rate(std::max(0.0, w[b]));
    }
    if (total < best_phi) {
      best_phi = total;
      best_x = x;
    }
  };

  // Walk the simplex lattice {i/n} row by row.
  std::function<void(std::size_t)> descend = [&](std::size_t row) {
    if (row == free_rows.size()) {
      evaluate();
      return;
    }
    const auto f = free_rows[row];
    const auto bs = sys.backends_of(f);
    if (bs.size() == 2) {
      for (long i = 0; i <= n; ++i) {
        const double share = static_cast<double>(i) / static_cast<double>(n);
        x(f, bs[0]) = share;
        x(f, bs[1]) = 1.0 - share;
        descend(row + 1);
      }
    } else {
      for (long i = 0; i <= n; ++i) {
        for (long j = 0; i + j <= n; ++j) {
          x(f, bs[0]) = static_cast<double>(i) / static_cast<double>(n);
          x(f, bs[1]) = static_cast<double>(j) / static_cast<double>(n);
          x(f, bs[2]) = static_cast<double>(n - i - j) / static_cast<double>(n);
          descend(row + 1);
        }
      }
    }
  };
  descend(0);

  if (!std::isfinite(best_phi)) {
    require_feasible(sys);
    throw InfeasibleError("no grid point keeps every backend below capacity", {});
  }
  fill_inflows(sys, best_x, w);
  return finish(sys, std::move(best_x), w);
}

OverloadEquilibrium equilibrium_rates(const BipartiteSystem& sys) {
  OverloadEquilibrium eq;
  eq.decomposition = stability_decomposition(sys);
  eq.rates = sys.capacities();
  eq.workload.assign(sys.num_backends(), kInf);
  if (eq.decomposition.frontends.empty() || eq.decomposition.backends.empty()) return eq;

  const auto sub = sys.restricted(eq.decomposition.frontends, eq.decomposition.backends);
  const auto opt = solve_fluid_optimum(sub);
  for (std::size_t k = 0; k < eq.decomposition.backends.size(); ++k) {
    const auto b = eq.decomposition.backends[k];
    eq.workload[b] = opt.workload[k];
    eq.rates[b] = sys.service(b).rate(opt.workload[k]);
  }
  return eq;
}

}  // namespace gmsr
