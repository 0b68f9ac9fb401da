#include "gmsr/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "gmsr/errors.hpp"
#include "gmsr/flownet.hpp"

namespace gmsr {

namespace {

constexpr std::size_t kEnumerationLimit = 12;

void require_threshold_dimension(const WorkloadVector& workload, const SlackConstants& slack) {
  if (workload.size() != slack.threshold.size()) {
    throw DimensionError("workload has " + std::to_string(workload.size()) + " entries, threshold has " +
                         std::to_string(slack.threshold.size()));
  }
}

double headroom_by_enumeration(const BipartiteSystem& sys, const std::vector<double>& rates_at_threshold) {
  const std::size_t nf = sys.num_frontends();
  std::vector<std::uint64_t> reach(nf, 0);
  for (std::size_t f = 0; f < nf; ++f) {
    for (auto b : sys.backends_of(f)) reach[f] |= std::uint64_t{1} << b;
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << nf); ++mask) {
    double load = 0.0;
    std::uint64_t hood = 0;
    for (std::size_t f = 0; f < nf; ++f) {
      if (mask >> f & 1) {
        load += sys.lambda(f);
        hood |= reach[f];
      }
    }
    double room = 0.0;
    for (std::size_t b = 0; b < sys.num_backends(); ++b) {
      if (hood >> b & 1) room += rates_at_threshold[b];
    }
    best = std::min(best, room - load);
  }
  return best;
}

// min over nonempty P of (cap(N(P)) - lambda(P)): the min cut with frontend
// f0 forced onto the source side equals lambda(F) + min over P containing f0.
double headroom_by_cuts(const BipartiteSystem& sys, const std::vector<double>& rates_at_threshold) {
  const double total = sys.total_arrival_rate();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t forced = 0; forced < sys.num_frontends(); ++forced) {
    auto aug = augmented_network(sys, rates_at_threshold);
    aug.network.add_arc(aug.network.source(), aug.frontend_node(forced), FlowNetwork::kInfinite);
    best = std::min(best, max_flow(aug.network).value - total);
  }
  return best;
}

}  // namespace

double lyapunov(const BipartiteSystem& sys, const WorkloadVector& workload, const RoutingMatrix& x) {
  require_backend_dimension(sys, workload.size(), "lyapunov");
  require_routing_dimension(sys, x, "lyapunov");
  const auto w = inflows(sys, x);
  double v = 0.0;
  for (std::size_t b = 0; b < w.size(); ++b) v += std::abs(w[b] - sys.service(b).rate(workload[b]));
  return v;
}

double tier_absolute_drift(const BipartiteSystem& sys, const WorkloadVector& workload, const RoutingMatrix& x,
                           const Tier& tier) {
  require_backend_dimension(sys, workload.size(), "tier_absolute_drift");
  require_routing_dimension(sys, x, "tier_absolute_drift");
  for (auto f : tier.frontends) {
    if (f >= sys.num_frontends()) throw std::out_of_range("tier references an unknown frontend");
  }
  const auto w = inflows(sys, x);
  double v = 0.0;
  for (auto b : tier.backends) {
    if (b >= sys.num_backends()) throw std::out_of_range("tier references an unknown backend");
    v += std::abs(w[b] - sys.service(b).rate(workload[b]));
  }
  return v;
}

SlackConstants capacity_slack(const BipartiteSystem& sys) {
  SlackConstants slack;
  slack.optimum = solve_fluid_optimum(sys);
  const std::size_t nb = sys.num_backends();
  slack.kappa = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < nb; ++b) {
    slack.kappa = std::min(slack.kappa, sys.service(b).gradient(slack.optimum.workload[b]) / 2.0);
  }
  slack.threshold.resize(nb);
  std::vector<double> rates(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    slack.threshold[b] = sys.service(b).inverse_gradient(slack.kappa);
    rates[b] = sys.service(b).rate(slack.threshold[b]);
  }
  slack.delta = sys.num_frontends() <= kEnumerationLimit && nb <= 64 ? headroom_by_enumeration(sys, rates)
                                                                     : headroom_by_cuts(sys, rates);
  return slack;
}

bool in_invariant_set(const WorkloadVector& workload, const SlackConstants& slack) {
  require_threshold_dimension(workload, slack);
  for (std::size_t b = 0; b < workload.size(); ++b) {
    if (workload[b] > slack.threshold[b]) return false;
  }
  return true;
}

double overshoot(const WorkloadVector& workload, const SlackConstants& slack) {
  require_threshold_dimension(workload, slack);
  double j = 0.0;
  for (std::size_t b = 0; b < workload.size(); ++b) j += std::max(workload[b] - slack.threshold[b], 0.0);
  return j;
}

ConvergenceCertificate certify_trajectory(const BipartiteSystem& sys, const FluidTrajectory& traj,
                                          const SlackConstants& slack) {
  if (traj.states.size() != traj.times.size() || traj.routing.size() != traj.times.size()) {
    throw std::invalid_argument("trajectory has mismatched sample arrays");
  }
  if (!traj.states.empty()) require_backend_dimension(sys, traj.states.front().size(), "certify_trajectory");

  ConvergenceCertificate cert;
  cert.times = traj.times;
  cert.tolerance = 1e-7 + 10.0 * traj.step;
  const double tol = cert.tolerance;
  const std::size_t n = traj.times.size();
  std::vector<bool> inside(n);
  for (std::size_t k = 0; k < n; ++k) {
    cert.lyapunov.push_back(lyapunov(sys, traj.states[k], traj.routing[k]));
    cert.overshoot.push_back(overshoot(traj.states[k], slack));
    inside[k] = in_invariant_set(traj.states[k], slack);
  }

  auto flag = [&](const char* check, std::size_t k, double lhs, double rhs) {
    std::ostringstream msg;
    msg << check << " at t=" << traj.times[k] << ": " << lhs << " > " << rhs;
    cert.violations.push_back(msg.str());
  };

  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (cert.lyapunov[k + 1] > cert.lyapunov[k] + tol) {
      flag("(a) V increased", k + 1, cert.lyapunov[k + 1], cert.lyapunov[k] + tol);
    }
  }

  double linear_rate = slack.delta;
  for (std::size_t b = 0; b < sys.num_backends(); ++b) {
    linear_rate = std::min(linear_rate, sys.service(b).rate(slack.threshold[b]));
  }

  std::size_t entry = n;
  for (std::size_t k = 0; k < n; ++k) {
    if (inside[k]) {
      entry = k;
      break;
    }
  }

  for (std::size_t k = 0; k + 1 < n && k + 1 <= entry; ++k) {
    if (inside[k] || inside[k + 1]) continue;
    const double slope = (cert.overshoot[k + 1] - cert.overshoot[k]) / (traj.times[k + 1] - traj.times[k]);
    if (slope > -linear_rate + tol) flag("(e) J slope", k + 1, slope, -linear_rate + tol);
  }

  if (n > 0) {
    const double bound = cert.overshoot.front() / linear_rate + tol;
    if (entry == n) {
      if (traj.times.back() > bound) flag("(d) K not entered", n - 1, traj.times.back(), bound);
    } else if (traj.times[entry] - traj.times.front() > bound) {
      flag("(d) K entry time", entry, traj.times[entry] - traj.times.front(), bound);
    }
  }

  if (entry < n) {
    cert.entry_time = traj.times[entry];
    const double v0 = cert.lyapunov[entry];
    double sum_opt = 0.0;
    for (double v : slack.optimum.workload) sum_opt += v;
    for (std::size_t k = entry; k < n; ++k) {
      const double elapsed = traj.times[k] - traj.times[entry];
      const double decay = v0 * std::exp(-0.9 * slack.kappa * elapsed) + tol;
      if (cert.lyapunov[k] > decay) flag("(b) V decay", k, cert.lyapunov[k], decay);
      double sum = 0.0;
      for (double v : traj.states[k]) sum += v;
      const double gap = std::abs(sum - sum_opt);
      const double allowed = cert.lyapunov[k] / slack.kappa + tol;
      if (gap > allowed) flag("(c) workload sum", k, gap, allowed);
    }

    // Least squares on log V until V is numerically gone.
    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    std::size_t m = 0;
    for (std::size_t k = entry; k < n && cert.lyapunov[k] >= 1e-6; ++k) {
      const double t = traj.times[k];
      const double y = std::log(cert.lyapunov[k]);
      st += t;
      sy += y;
      stt += t * t;
      sty += t * y;
      ++m;
    }
    if (m >= 2) {
      const double denom = static_cast<double>(m) * stt - st * st;
      if (denom > 0.0) cert.fitted_rate = -(static_cast<double>(m) * sty - st * sy) / denom;
    }
  }
  return cert;
}

}  // namespace gmsr
