#include "gmsr/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "gmsr/diagnostics.hpp"
#include "gmsr/errors.hpp"
#include "gmsr/flownet.hpp"
#include "gmsr/fluid_dyn.hpp"
#include "gmsr/fluid_opt.hpp"
#include "gmsr/report_io.hpp"
#include "gmsr/scenario.hpp"
#include "gmsr/stochastic.hpp"

namespace gmsr {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Options {
  std::string scenario;
  std::string out = ".";
  std::string scales;
  std::size_t seeds = 0;
  std::string policy;
  double h = 0.0;
  double tie_tol = 0.0;
  std::string mode;
  std::size_t thin = 0;
  std::uint64_t seed_base = 0;
};

std::vector<std::uint64_t> parse_scales(const std::string& list) {
  std::vector<std::uint64_t> out;
  std::stringstream in(list);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v <= 0) throw std::invalid_argument(item);
      out.push_back(static_cast<std::uint64_t>(v));
    } catch (const std::exception&) {
      throw ParseError("--scales: '" + item + "' is not a positive integer");
    }
  }
  if (out.empty()) throw ParseError("--scales: empty list");
  return out;
}

// Scenario with command-line overrides applied.
Scenario prepare(const Options& opt) {
  Scenario sc = load_scenario(opt.scenario);
  sc.output_dir = opt.out;
  if (!opt.scales.empty()) sc.scales = parse_scales(opt.scales);
  if (opt.seeds > 0) sc.seeds = opt.seeds;
  if (!opt.policy.empty()) sc.policy = parse_policy(opt.policy);
  if (opt.h > 0.0) sc.integrator.step = opt.h;
  if (opt.tie_tol > 0.0) sc.integrator.tie_tol = opt.tie_tol;
  if (!opt.mode.empty()) sc.integrator.mode = parse_mode(opt.mode);
  if (opt.thin > 0) sc.integrator.record_every = opt.thin;
  fs::create_directories(sc.output_dir);
  return sc;
}

std::string out_path(const Scenario& sc, const std::string& name) { return (fs::path(sc.output_dir) / name).string(); }

int cmd_validate(const Options& opt) {
  const Scenario sc = load_scenario(opt.scenario);
  std::cout << "valid: " << sc.system.num_frontends() << " frontends, " << sc.system.num_backends()
            << " backends, " << sc.system.edges().size() << " edges\n";
  std::cout << (feasibility_check(sc.system) ? "feasible" : "overloaded") << '\n';
  return kExitOk;
}

int cmd_optimum(const Options& opt) {
  const Scenario sc = prepare(opt);
  const auto result = solve_fluid_optimum(sc.system);
  const auto doc = optimum_json(sc.system, result);
  write_json_file(out_path(sc, "optimum.json"), doc);
  std::cout << doc.dump(2) << '\n';
  return kExitOk;
}

int cmd_fluid(const Options& opt) {
  const Scenario sc = prepare(opt);
  const auto traj = integrate_fluid(sc.system, sc.initial, sc.horizon, sc.integrator);
  std::ofstream csv(out_path(sc, "trajectory.csv"));
  write_trajectory_csv(csv, sc.system, traj);
  std::ofstream ev(out_path(sc, "events.csv"));
  write_events_csv(ev, sc.system, traj.events);

  json doc;
  doc["mode"] = to_string(sc.integrator.mode);
  doc["h"] = traj.step;
  doc["tie_tol"] = sc.integrator.tie_tol;
  doc["horizon"] = traj.times.back();
  json final_state = json::object();
  for (std::size_t b = 0; b < sc.system.num_backends(); ++b) {
    final_state[sc.system.backend(b).id] = traj.states.back()[b];
  }
  doc["final_state"] = final_state;
  doc["events"] = traj.events.size();
  doc["boundary_clamps"] = traj.boundary_clamps;
  doc["fallback_steps"] = traj.fallback_steps;
  write_json_file(out_path(sc, "fluid.json"), doc);
  std::cout << doc.dump(2) << '\n';
  return kExitOk;
}

int cmd_simulate(const Options& opt) {
  const Scenario sc = prepare(opt);
  const auto min_scale = *std::min_element(sc.scales.begin(), sc.scales.end());
  IntegratorConfig fcfg = sc.integrator;
  fcfg.record_every = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(1.0 / (static_cast<double>(min_scale) * fcfg.step))));
  const auto fluid = integrate_fluid(sc.system, sc.initial, sc.horizon, fcfg);

  struct Cell {
    std::uint64_t scale;
    std::uint64_t seed;
    std::string file;
  };
  std::vector<Cell> cells;
  for (auto c : sc.scales) {
    for (std::size_t k = 0; k < sc.seeds; ++k) {
      const std::uint64_t seed = opt.seed_base + k;
      cells.push_back({c, seed, "sim_c" + std::to_string(c) + "_seed" + std::to_string(seed) + ".csv"});
    }
  }

  std::vector<SampledRun> runs(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex failure_lock;
  std::exception_ptr failure;
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        SimulationConfig cfg{cells[i].scale, sc.horizon, sc.policy, cells[i].seed, std::max<std::size_t>(1, opt.thin)};
        runs[i] = simulate(sc.system, sc.initial, cfg);
        std::ofstream csv(out_path(sc, cells[i].file));
        write_trajectory_csv(csv, sc.system, runs[i]);
      } catch (...) {
        std::lock_guard lock(failure_lock);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, cells.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  const auto cmp = compare_to_fluid(runs, fluid);
  json doc;
  doc["policy"] = to_string(sc.policy);
  doc["horizon"] = sc.horizon;
  json list = json::array();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    list.push_back({{"scale", cells[i].scale},
                    {"seed", cells[i].seed},
                    {"file", cells[i].file},
                    {"deviation", cmp.deviation[i]},
                    {"clamp_events", runs[i].clamp_events},
                    {"empty_backend_steps", runs[i].empty_backend_steps},
                    {"steps", runs[i].steps}});
  }
  doc["runs"] = list;
  json medians = json::object();
  for (const auto& [c, m] : cmp.median_by_scale) medians[std::to_string(c)] = m;
  doc["median_deviation"] = medians;
  write_json_file(out_path(sc, "simulate_summary.json"), doc);
  std::cout << "wrote " << cells.size() << " trajectories\n" << medians.dump(2) << '\n';
  return kExitOk;
}

int cmd_overload(const Options& opt) {
  const Scenario sc = prepare(opt);
  const bool feasible = feasibility_check(sc.system);
  const auto eq = equilibrium_rates(sc.system);
  const auto doc = overload_json(sc.system, eq, opt_tp(sc.system), feasible);
  write_json_file(out_path(sc, "overload.json"), doc);
  std::cout << doc.dump(2) << '\n';
  return kExitOk;
}

int cmd_certify(const Options& opt) {
  const Scenario sc = prepare(opt);
  const auto slack = capacity_slack(sc.system);
  const auto traj = integrate_fluid(sc.system, sc.initial, sc.horizon, sc.integrator);
  const auto cert = certify_trajectory(sc.system, traj, slack);
  write_json_file(out_path(sc, "certificate.json"), certificate_json(cert, slack));
  std::cout << "kappa " << slack.kappa << ", delta " << slack.delta << ", violations " << cert.violations.size()
            << '\n';
  for (const auto& v : cert.violations) std::cerr << v << '\n';
  return cert.passed() ? kExitOk : kExitRuntime;
}

// Copies headline numbers out of whatever result files the directory holds.
int cmd_report(const Options& opt) {
  const fs::path dir = opt.scenario;
  if (!fs::is_directory(dir)) throw ParseError("report: '" + dir.string() + "' is not a directory");
  json report = json::object();
  auto pick = [&](const char* file, std::initializer_list<const char*> keys) {
    const auto path = dir / file;
    if (!fs::exists(path)) return;
    const auto doc = read_json_file(path.string());
    json part = json::object();
    for (const char* k : keys) {
      if (doc.contains(k)) part[k] = doc.at(k);
    }
    report[file] = part;
  };
  pick("optimum.json", {"workload", "objective", "kkt_residual"});
  pick("overload.json", {"note", "decomposition", "rates", "opt_tp"});
  pick("fluid.json", {"mode", "final_state", "events", "fallback_steps"});
  pick("certificate.json", {"entry_time", "fitted_rate", "violations", "tolerance", "slack"});
  pick("simulate_summary.json", {"policy", "median_deviation"});

  std::size_t trajectories = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".csv") ++trajectories;
  }
  report["csv_files"] = trajectories;
  write_json_file((dir / "report.json").string(), report);
  std::cout << report.dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int run_command(int argc, const char* const* argv) {
  CLI::App app{"GMSR load balancing: fluid optimum, dynamics, simulation and overload analysis", "gmsr"};
  app.set_help_flag("--help", "print this help and exit");
  app.require_subcommand(1);
  Options opt;
  app.add_option("--out", opt.out, "output directory");
  app.add_option("--scales", opt.scales, "comma-separated scaling parameters c");
  app.add_option("--seeds", opt.seeds, "seeds per scale");
  app.add_option("--policy", opt.policy, "gmsr or random");
  app.add_option("--h", opt.h, "fluid integration step");
  app.add_option("--tie-tol", opt.tie_tol, "gradient tie band");
  app.add_option("--mode", opt.mode, "sliding or strict-argmax");
  app.add_option("--thin", opt.thin, "record every K-th step");
  app.add_option("--seed-base", opt.seed_base, "first seed");
  app.fallthrough();

  std::map<std::string, int (*)(const Options&)> handlers{
      {"validate", cmd_validate}, {"optimum", cmd_optimum}, {"fluid", cmd_fluid},   {"simulate", cmd_simulate},
      {"overload", cmd_overload}, {"certify", cmd_certify}, {"report", cmd_report},
  };
  std::map<std::string, std::string> help{
      {"validate", "check a scenario file"},
      {"optimum", "solve the fluid optimization problem"},
      {"fluid", "integrate the fluid dynamics"},
      {"simulate", "run the scaled stochastic model and compare to the fluid path"},
      {"overload", "stability decomposition and limiting service rates"},
      {"certify", "Lyapunov convergence certificate of a fluid trajectory"},
      {"report", "summarize result files in a directory"},
  };
  for (const auto& [name, _] : handlers) {
    auto* sub = app.add_subcommand(name, help[name]);
    sub->add_option(name == "report" ? "dir" : "scenario", opt.scenario)->required();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    return handlers.at(name)(opt);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    for (const auto& v : e.violations()) std::cerr << "  " << v << '\n';
    return kExitInvalid;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const InfeasibleError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace gmsr
