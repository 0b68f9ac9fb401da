#include <doctest.h>

#include <cmath>

#include "gmsr/diagnostics.hpp"
#include "gmsr/fluid_dyn.hpp"
#include "gmsr/tiers.hpp"
#include "support/oracles.hpp"

using namespace gmsr;

namespace {
const double kKappa = (3.0 - 2.0 * std::sqrt(2.0)) / 2.0;
}

TEST_CASE("lyapunov values") {
  const auto n = oracle::n_model();
  RoutingMatrix x(2, 2);
  x(0, 0) = 1;
  x(1, 0) = 1;
  CHECK(lyapunov(n, {0, 0}, x) == doctest::Approx(1.0));

  const auto slack = capacity_slack(n);
  CHECK(lyapunov(n, slack.optimum.workload, slack.optimum.routing) < 1e-9);

  const auto s = oracle::single_pair(0.5);
  RoutingMatrix one(1, 1);
  one(0, 0) = 1;
  const double n03 = s.service(0).inverse_rate(0.3);
  CHECK(lyapunov(s, {n03}, one) == doctest::Approx(0.2));
}

TEST_CASE("tier drift") {
  const auto n = oracle::n_model();
  RoutingMatrix x(2, 2);
  x(0, 0) = 1;
  x(1, 0) = 1;
  const auto part = compute_tiers(n, gradients(n, std::vector<double>{0, 0}), 1e-3);
  double total = 0;
  for (const auto& t : part.tiers) total += tier_absolute_drift(n, {0, 0}, x, t);
  CHECK(total == doctest::Approx(1.0));

  // single pair with S = -0.2
  const auto s = oracle::single_pair(0.3);
  RoutingMatrix one(1, 1);
  one(0, 0) = 1;
  const WorkloadVector w{1.0};  // rate 0.5
  const auto p = compute_tiers(s, gradients(s, w), 1e-3);
  CHECK(tier_absolute_drift(s, w, one, p[0]) == doctest::Approx(0.2));
}

TEST_CASE("capacity slack") {
  const auto n = capacity_slack(oracle::n_model());
  CHECK(n.kappa == doctest::Approx(kKappa).epsilon(1e-8));
  CHECK(n.threshold[0] == doctest::Approx(1 + std::sqrt(2.0)).epsilon(1e-7));
  CHECK(n.threshold[1] == doctest::Approx(2 * std::sqrt(2.0)).epsilon(1e-7));
  const std::vector<double> rates{n.threshold[0] / (n.threshold[0] + 1), n.threshold[1] / (n.threshold[1] + 2)};
  CHECK(n.delta == doctest::Approx(oracle::subset_headroom(oracle::n_model(), rates)).epsilon(1e-9));

  const auto s = capacity_slack(oracle::single_pair(0.5));
  CHECK(s.kappa == doctest::Approx(0.125));
  CHECK(s.threshold[0] == doctest::Approx(std::sqrt(8.0) - 1));
  CHECK(s.delta == doctest::Approx(0.146447).epsilon(1e-5));
}

TEST_CASE("invariant set and overshoot") {
  const auto slack = capacity_slack(oracle::n_model());
  CHECK(in_invariant_set({0, 0}, slack));
  CHECK(in_invariant_set(slack.threshold, slack));
  CHECK(!in_invariant_set({3, 3}, slack));
  CHECK(overshoot({0, 0}, slack) == 0.0);
  CHECK(overshoot({3, 3}, slack) == doctest::Approx(0.757359).epsilon(1e-5));
  CHECK(overshoot({slack.threshold[0] + 1, 0}, slack) == doctest::Approx(1.0));
}

TEST_CASE("certificates on the n-model") {
  const auto sys = oracle::n_model();
  const auto slack = capacity_slack(sys);
  IntegratorConfig cfg;
  cfg.record_every = 100;

  const auto inside = certify_trajectory(sys, integrate_fluid(sys, {0, 0}, 50.0, cfg), slack);
  CHECK(inside.passed());
  REQUIRE(inside.entry_time.has_value());
  CHECK(*inside.entry_time == 0.0);

  const auto outside = certify_trajectory(sys, integrate_fluid(sys, {5, 5}, 80.0, cfg), slack);
  for (const auto& v : outside.violations) MESSAGE(v);
  CHECK(outside.passed());
  REQUIRE(outside.entry_time.has_value());
  CHECK(*outside.entry_time > 0.0);
  CHECK(outside.fitted_rate >= 0.9 * slack.kappa);

  FluidTrajectory still;
  still.step = 1e-3;
  for (int k = 0; k < 10; ++k) {
    still.times.push_back(k);
    still.states.push_back(slack.optimum.workload);
    still.routing.push_back(slack.optimum.routing);
  }
  const auto c = certify_trajectory(sys, still, slack);
  CHECK(c.passed());
  for (double v : c.lyapunov) CHECK(v < 1e-9);
}

TEST_CASE("certificate flags a rising V") {
  const auto sys = oracle::n_model();
  const auto slack = capacity_slack(sys);
  FluidTrajectory bad;
  bad.step = 1e-3;
  RoutingMatrix x(2, 2);
  x(0, 0) = 1;
  x(1, 0) = 1;
  bad.times = {0, 1};
  bad.states = {slack.optimum.workload, {0, 0}};
  bad.routing = {slack.optimum.routing, x};
  CHECK(!certify_trajectory(sys, bad, slack).passed());
}
