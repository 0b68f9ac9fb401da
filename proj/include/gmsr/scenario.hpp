#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gmsr/fluid_dyn.hpp"
#include "gmsr/stochastic.hpp"
#include "gmsr/system.hpp"

namespace gmsr {

struct Scenario {
  explicit Scenario(BipartiteSystem sys) : system(std::move(sys)) {}

  BipartiteSystem system;
  WorkloadVector initial;  // zero unless given
  double horizon = 50.0;
  IntegratorConfig integrator;
  std::vector<std::uint64_t> scales{20, 100, 500};
  std::size_t seeds = 20;
  Policy policy = Policy::Gmsr;
  std::string output_dir = ".";
};

/// Parses scenario JSON. Throws ParseError naming the offending field (or the
/// line for malformed JSON) and ValidationError for structural problems.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);

ServiceRateFn parse_service(const std::string& kind, double cap, double shape);
IntegratorMode parse_mode(const std::string& name);
Policy parse_policy(const std::string& name);

}  // namespace gmsr
