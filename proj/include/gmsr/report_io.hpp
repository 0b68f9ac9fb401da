#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "gmsr/diagnostics.hpp"
#include "gmsr/fluid_dyn.hpp"
#include "gmsr/fluid_opt.hpp"
#include "gmsr/stochastic.hpp"
#include "gmsr/system.hpp"

namespace gmsr {

struct TrajectoryRow {
  double t = 0.0;
  std::string backend;
  double workload = 0.0;
  double service_rate = 0.0;
  double gradient = 0.0;
  double inflow = 0.0;
};

struct EventRow {
  double t = 0.0;
  std::string kind;
  std::string tiers;
};

inline constexpr const char* kTrajectoryHeader = "t,backend_id,workload,service_rate,gradient,inflow";
inline constexpr const char* kEventsHeader = "t,kind,tiers";

void write_trajectory_csv(std::ostream& out, const BipartiteSystem& sys, const FluidTrajectory& traj);
/// Inflow of a stochastic run is the realized arrival rate over the window
/// that starts at each sample (the preceding window for the last one).
void write_trajectory_csv(std::ostream& out, const BipartiteSystem& sys, const SampledRun& run);
std::vector<TrajectoryRow> read_trajectory_csv(std::istream& in);

/// Tiers as "F1|B1;F2|B2" with ids joined by ','.
std::string format_tiers(const BipartiteSystem& sys, const TierPartition& partition);
void write_events_csv(std::ostream& out, const BipartiteSystem& sys, const std::vector<TierEvent>& events);
std::vector<EventRow> read_events_csv(std::istream& in);

nlohmann::json optimum_json(const BipartiteSystem& sys, const FluidOptimum& opt);
nlohmann::json overload_json(const BipartiteSystem& sys, const OverloadEquilibrium& eq, double throughput,
                             bool feasible);
nlohmann::json certificate_json(const ConvergenceCertificate& cert, const SlackConstants& slack);

void write_json_file(const std::string& path, const nlohmann::json& doc);
nlohmann::json read_json_file(const std::string& path);

}  // namespace gmsr
