#include "gmsr/report_io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "gmsr/errors.hpp"

namespace gmsr {

namespace {

using nlohmann::json;

void full_precision(std::ostream& out) { out << std::setprecision(std::numeric_limits<double>::max_digits10); }

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) parts.push_back(cur);
  if (!line.empty() && line.back() == sep) parts.emplace_back();
  return parts;
}

double to_double(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line) + ": '" + s + "' is not a number");
  }
}

void expect_header(std::istream& in, const char* header) {
  std::string line;
  if (!std::getline(in, line) || line != header) {
    throw ParseError(std::string("line 1: expected header '") + header + "'");
  }
}

void trajectory_row(std::ostream& out, double t, const std::string& id, double n, const ServiceRateFn& fn,
                    double inflow) {
  out << t << ',' << id << ',' << n << ',' << fn.rate(n) << ',' << fn.gradient(n) << ',' << inflow << '\n';
}

json ids_of(const std::vector<std::size_t>& idx, const std::vector<std::string>& names) {
  json arr = json::array();
  for (auto i : idx) arr.push_back(names[i]);
  return arr;
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const BipartiteSystem& sys, const FluidTrajectory& traj) {
  full_precision(out);
  out << kTrajectoryHeader << '\n';
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const auto w = inflows(sys, traj.routing[k]);
    for (std::size_t b = 0; b < sys.num_backends(); ++b) {
      trajectory_row(out, traj.times[k], sys.backend(b).id, traj.states[k][b], sys.service(b), w[b]);
    }
  }
}

void write_trajectory_csv(std::ostream& out, const BipartiteSystem& sys, const SampledRun& run) {
  full_precision(out);
  out << kTrajectoryHeader << '\n';
  const double c = static_cast<double>(run.scale);
  const std::size_t n = run.times.size();
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t lo = k + 1 < n ? k : (k > 0 ? k - 1 : k);
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double span = run.times[hi] - run.times[lo];
    for (std::size_t b = 0; b < sys.num_backends(); ++b) {
      const double jobs = static_cast<double>(run.arrivals_at[hi][b] - run.arrivals_at[lo][b]);
      const double inflow = span > 0.0 ? jobs / c / span : 0.0;
      trajectory_row(out, run.times[k], sys.backend(b).id, run.states[k][b], sys.service(b), inflow);
    }
  }
}

std::vector<TrajectoryRow> read_trajectory_csv(std::istream& in) {
  expect_header(in, kTrajectoryHeader);
  std::vector<TrajectoryRow> rows;
  std::string line;
  for (std::size_t no = 2; std::getline(in, line); ++no) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 6) throw ParseError("line " + std::to_string(no) + ": expected 6 columns");
    rows.push_back({to_double(cells[0], no), cells[1], to_double(cells[2], no), to_double(cells[3], no),
                    to_double(cells[4], no), to_double(cells[5], no)});
  }
  return rows;
}

std::string format_tiers(const BipartiteSystem& sys, const TierPartition& partition) {
  std::string out;
  for (std::size_t i = 0; i < partition.size(); ++i) {
    if (i > 0) out += ';';
    const auto& tier = partition[i];
    for (std::size_t k = 0; k < tier.frontends.size(); ++k) {
      if (k > 0) out += ',';
      out += sys.frontend(tier.frontends[k]).id;
    }
    out += '|';
    for (std::size_t k = 0; k < tier.backends.size(); ++k) {
      if (k > 0) out += ',';
      out += sys.backend(tier.backends[k]).id;
    }
  }
  return out;
}

void write_events_csv(std::ostream& out, const BipartiteSystem& sys, const std::vector<TierEvent>& events) {
  full_precision(out);
  out << kEventsHeader << '\n';
  for (const auto& e : events) {
    // Tier lists contain commas, so the field is quoted.
    out << e.time << ',' << to_string(e.kind) << ",\"" << format_tiers(sys, e.partition) << "\"\n";
  }
}

std::vector<EventRow> read_events_csv(std::istream& in) {
  expect_header(in, kEventsHeader);
  std::vector<EventRow> rows;
  std::string line;
  for (std::size_t no = 2; std::getline(in, line); ++no) {
    if (line.empty()) continue;
    const auto first = line.find(',');
    const auto second = first == std::string::npos ? first : line.find(',', first + 1);
    if (second == std::string::npos) throw ParseError("line " + std::to_string(no) + ": expected 3 columns");
    std::string tiers = line.substr(second + 1);
    if (tiers.size() >= 2 && tiers.front() == '"' && tiers.back() == '"') tiers = tiers.substr(1, tiers.size() - 2);
    rows.push_back({to_double(line.substr(0, first), no), line.substr(first + 1, second - first - 1), tiers});
  }
  return rows;
}

json optimum_json(const BipartiteSystem& sys, const FluidOptimum& opt) {
  json doc;
  json workload = json::object();
  for (std::size_t b = 0; b < sys.num_backends(); ++b) workload[sys.backend(b).id] = opt.workload[b];
  doc["workload"] = workload;
  json routing = json::array();
  for (const auto& e : sys.edges()) {
    routing.push_back({{"frontend", sys.frontend(e.frontend).id},
                       {"backend", sys.backend(e.backend).id},
                       {"share", opt.routing(e.frontend, e.backend)}});
  }
  doc["routing"] = routing;
  doc["objective"] = opt.objective;
  doc["kkt_residual"] = opt.kkt_residual;
  doc["iterations"] = opt.iterations;
  return doc;
}

json overload_json(const BipartiteSystem& sys, const OverloadEquilibrium& eq, double throughput, bool feasible) {
  std::vector<std::string> fnames;
  std::vector<std::string> bnames;
  for (std::size_t f = 0; f < sys.num_frontends(); ++f) fnames.push_back(sys.frontend(f).id);
  for (std::size_t b = 0; b < sys.num_backends(); ++b) bnames.push_back(sys.backend(b).id);

  json doc;
  doc["note"] = feasible ? "feasible" : "overloaded";
  doc["decomposition"] = {{"frontends", ids_of(eq.decomposition.frontends, fnames)},
                          {"backends", ids_of(eq.decomposition.backends, bnames)}};
  json rates = json::object();
  json workload = json::object();
  double total = 0.0;
  for (std::size_t b = 0; b < sys.num_backends(); ++b) {
    rates[bnames[b]] = eq.rates[b];
    workload[bnames[b]] = std::isfinite(eq.workload[b]) ? json(eq.workload[b]) : json(nullptr);
    total += eq.rates[b];
  }
  doc["rates"] = rates;
  doc["workload"] = workload;
  doc["total_rate"] = total;
  doc["opt_tp"] = throughput;
  return doc;
}

json certificate_json(const ConvergenceCertificate& cert, const SlackConstants& slack) {
  json doc;
  doc["times"] = cert.times;
  doc["lyapunov"] = cert.lyapunov;
  doc["overshoot"] = cert.overshoot;
  doc["entry_time"] = cert.entry_time ? json(*cert.entry_time) : json(nullptr);
  doc["fitted_rate"] = cert.fitted_rate;
  doc["violations"] = cert.violations;
  doc["tolerance"] = cert.tolerance;
  doc["slack"] = {{"kappa", slack.kappa}, {"delta", slack.delta}, {"threshold", slack.threshold}};
  return doc;
}

void write_json_file(const std::string& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << doc.dump(2) << '\n';
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace gmsr
