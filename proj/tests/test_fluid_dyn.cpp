#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gmsr/errors.hpp"
#include "gmsr/fluid_dyn.hpp"
#include "gmsr/fluid_opt.hpp"
#include "gmsr/tiers.hpp"
#include "support/oracles.hpp"

using namespace gmsr;

namespace {

BipartiteSystem twin(double lambda) {
  SystemDescription d;
  d.frontends = {{"f1", lambda}};
  d.backends = {{"b1", ServiceRateFn::hill(1, 1)}, {"b2", ServiceRateFn::hill(1, 1)}};
  d.edges = {{"f1", "b1"}, {"f1", "b2"}};
  return BipartiteSystem(d);
}

}  // namespace

TEST_CASE("routing sets") {
  const auto n = oracle::n_model();
  const auto at_zero = gmsr_routing_set(n, {0, 0}, 1e-3);
  CHECK(at_zero[0] == std::vector<std::size_t>{0});
  CHECK(at_zero[1] == std::vector<std::size_t>{0});
  const double r = std::sqrt(2.0);
  CHECK(gmsr_routing_set(n, {r, r}, 1e-9)[1] == std::vector<std::size_t>{0, 1});
}

TEST_CASE("sliding drift") {
  SUBCASE("single backend tier") {
    const auto s = oracle::single_pair(0.5);
    const WorkloadVector n{0.3};
    const auto part = compute_tiers(s, gradients(s, n), 1e-3);
    const auto d = sliding_drift(s, n, part, 1e-3);
    CHECK(d.drift[0] == doctest::Approx(0.5 - 0.3 / 1.3));
  }
  SUBCASE("zero at the optimum") {
    const auto n = oracle::n_model();
    const auto opt = solve_fluid_optimum(n);
    const auto part = compute_tiers(n, gradients(n, opt.workload), 1e-3);
    const auto d = sliding_drift(n, opt.workload, part, 1e-3);
    CHECK(std::abs(d.drift[0]) < 1e-8);
    CHECK(std::abs(d.drift[1]) < 1e-8);
  }
  SUBCASE("symmetric twins split evenly") {
    const auto s = twin(0.5);
    const WorkloadVector n{0, 0};
    const auto part = compute_tiers(s, gradients(s, n), 1e-3);
    const auto d = sliding_drift(s, n, part, 1e-3);
    CHECK(d.drift[0] == doctest::Approx(0.25));
    CHECK(d.drift[1] == doctest::Approx(0.25));
    CHECK(d.feasible == std::vector<bool>{true});

    // strict argmax, averaged over time, lands on the same split
    IntegratorConfig cfg;
    cfg.mode = IntegratorMode::StrictArgmax;
    cfg.record_every = 1000;
    const auto tr = integrate_fluid(s, n, 1.0, cfg);
    CHECK(tr.states.back()[0] == doctest::Approx(tr.states.back()[1]).epsilon(1e-2));
  }
}

TEST_CASE("single pair against a fine reference") {
  const auto s = oracle::single_pair(0.5);
  const auto tr = integrate_fluid(s, {0.0}, 50.0);
  const double ref = oracle::single_pair_reference(0.5, 1, 1, 0, 50, 1e-5);
  CHECK(std::abs(tr.states.back()[0] - ref) < 1e-3);
  CHECK(std::abs(tr.states.back()[0] - 1.0) < 1e-3);
}

TEST_CASE("fixed point stays put") {
  const auto n = oracle::n_model();
  const auto opt = solve_fluid_optimum(n);
  const auto tr = integrate_fluid(n, opt.workload, 5.0);
  for (const auto& s : tr.states) {
    CHECK(std::abs(s[0] - opt.workload[0]) < 1e-6);
    CHECK(std::abs(s[1] - opt.workload[1]) < 1e-6);
  }
}

TEST_CASE("n-model converges in both modes") {
  const auto n = oracle::n_model();
  const auto star = oracle::n_model_kkt();
  for (auto mode : {IntegratorMode::Sliding, IntegratorMode::StrictArgmax}) {
    IntegratorConfig cfg;
    cfg.mode = mode;
    cfg.record_every = 100;
    const auto tr = integrate_fluid(n, {0, 0}, 50.0, cfg);
    CHECK(std::abs(tr.states.back()[0] - star.n1) < 1e-2);
    CHECK(std::abs(tr.states.back()[1] - star.n2) < 1e-2);
    CHECK(tr.times.size() == tr.states.size());
    CHECK(tr.routing.size() == tr.states.size());
    for (const auto& x : tr.routing) CHECK(validate_routing(n, x, 1e-9).empty());
  }
}

TEST_CASE("mode agreement") {
  CHECK(modes_agree(oracle::single_pair(0.5), {2.0}, 10.0, 1e-3, 1e-3) < 1e-9);
  CHECK(modes_agree(twin(0.6), {0.5, 0.0}, 10.0, 1e-3, 1e-3) <= 10 * (1e-3 + 1e-3));
  CHECK(modes_agree(oracle::n_model(), {0, 0}, 50.0, 1e-3, 1e-3) <= 0.05);
}

TEST_CASE("events") {
  const auto n = oracle::n_model();
  const auto tr = integrate_fluid(n, {0, 0}, 20.0);
  REQUIRE(!tr.events.empty());
  CHECK(tr.events.front().kind == TierEventKind::Slide);
  CHECK(tr.events.front().time == 0.0);
  for (std::size_t k = 1; k < tr.events.size(); ++k) CHECK(tr.events[k].time >= tr.events[k - 1].time);

  // a coarse step overshoots zero while draining and gets clamped
  const auto idle = oracle::single_pair(0.0);
  IntegratorConfig coarse;
  coarse.step = 1.5;
  const auto dr = integrate_fluid(idle, {0.1}, 3.0, coarse);
  CHECK(dr.boundary_clamps > 0);
  CHECK(std::any_of(dr.events.begin(), dr.events.end(), [](const TierEvent& e) { return e.kind == TierEventKind::Boundary; }));
  CHECK(dr.states.back()[0] >= 0.0);
}

TEST_CASE("bad inputs") {
  const auto n = oracle::n_model();
  CHECK_THROWS_AS(integrate_fluid(n, {0}, 1.0), DimensionError);
  CHECK_THROWS_AS(integrate_fluid(n, {-1, 0}, 1.0), DomainError);
  IntegratorConfig cfg;
  cfg.step = 0;
  CHECK_THROWS_AS(integrate_fluid(n, {0, 0}, 1.0, cfg), std::invalid_argument);
}
