#include "gmsr/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gmsr/errors.hpp"

namespace gmsr {

namespace {

using nlohmann::json;

const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) throw ParseError(where + ": missing field '" + key + "'");
  return obj.at(key);
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ParseError(where + ": expected a number");
  return v.get<double>();
}

std::string text(const json& v, const std::string& where) {
  if (!v.is_string()) throw ParseError(where + ": expected a string");
  return v.get<std::string>();
}

std::size_t line_of(const std::string& src, std::size_t byte) {
  byte = std::min(byte, src.size());
  return 1 + static_cast<std::size_t>(std::count(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

SystemDescription parse_description(const json& doc) {
  SystemDescription desc;
  const auto& fs = field(doc, "frontends", "scenario");
  if (!fs.is_array()) throw ParseError("frontends: expected an array");
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const std::string where = "frontends[" + std::to_string(i) + "]";
    desc.frontends.push_back({text(field(fs[i], "id", where), where + ".id"),
                              number(field(fs[i], "lambda", where), where + ".lambda")});
  }

  const auto& bs = field(doc, "backends", "scenario");
  if (!bs.is_array()) throw ParseError("backends: expected an array");
  for (std::size_t i = 0; i < bs.size(); ++i) {
    const std::string where = "backends[" + std::to_string(i) + "]";
    const auto id = text(field(bs[i], "id", where), where + ".id");
    const auto& svc = field(bs[i], "service", where);
    const std::string sw = where + ".service";
    const auto kind = text(field(svc, "kind", sw), sw + ".kind");
    const double cap = number(field(svc, "cap", sw), sw + ".cap");
    double shape = 0.0;
    if (kind == "hill") {
      shape = number(field(svc, "half", sw), sw + ".half");
    } else if (kind == "saturating-exponential") {
      shape = number(field(svc, "rate", sw), sw + ".rate");
    } else {
      throw ParseError(sw + ".kind: unknown service kind '" + kind + "'");
    }
    try {
      desc.backends.push_back({id, parse_service(kind, cap, shape)});
    } catch (const DomainError& e) {
      throw ParseError(sw + ": " + e.what());
    }
  }

  const auto& es = field(doc, "edges", "scenario");
  if (!es.is_array()) throw ParseError("edges: expected an array");
  for (std::size_t i = 0; i < es.size(); ++i) {
    const std::string where = "edges[" + std::to_string(i) + "]";
    if (!es[i].is_array() || es[i].size() != 2) throw ParseError(where + ": expected [frontend, backend]");
    desc.edges.emplace_back(text(es[i][0], where + "[0]"), text(es[i][1], where + "[1]"));
  }
  return desc;
}

}  // namespace

ServiceRateFn parse_service(const std::string& kind, double cap, double shape) {
  if (kind == "hill") return ServiceRateFn::hill(cap, shape);
  if (kind == "saturating-exponential") return ServiceRateFn::saturating_exponential(cap, shape);
  throw ParseError("unknown service kind '" + kind + "'");
}

IntegratorMode parse_mode(const std::string& name) {
  if (name == "sliding") return IntegratorMode::Sliding;
  if (name == "strict-argmax") return IntegratorMode::StrictArgmax;
  throw ParseError("unknown integrator mode '" + name + "' (sliding, strict-argmax)");
}

Policy parse_policy(const std::string& name) {
  if (name == "gmsr") return Policy::Gmsr;
  if (name == "random") return Policy::Random;
  throw ParseError("unknown policy '" + name + "' (gmsr, random)");
}

Scenario parse_scenario(const std::string& src) {
  json doc;
  try {
    doc = json::parse(src);
  } catch (const json::parse_error& e) {
    throw ParseError("line " + std::to_string(line_of(src, e.byte)) + ": " + e.what());
  }
  if (!doc.is_object()) throw ParseError("scenario: expected a JSON object");

  Scenario sc(BipartiteSystem(parse_description(doc)));
  const auto& sys = sc.system;
  std::vector<std::string> problems;

  sc.initial.assign(sys.num_backends(), 0.0);
  if (doc.contains("initial")) {
    const auto& init = doc.at("initial");
    if (!init.is_object()) throw ParseError("initial: expected an object of backend id to workload");
    for (const auto& [id, value] : init.items()) {
      const double n = number(value, "initial." + id);
      const auto b = sys.backend_index(id);
      if (!b) {
        problems.push_back("initial workload names unknown backend '" + id + "'");
      } else if (!(n >= 0.0)) {
        problems.push_back("initial workload of '" + id + "' is negative");
      } else {
        sc.initial[*b] = n;
      }
    }
  }

  if (doc.contains("horizon")) {
    sc.horizon = number(doc.at("horizon"), "horizon");
    if (!(sc.horizon > 0.0)) problems.push_back("horizon must be positive");
  }

  if (doc.contains("integrator")) {
    const auto& in = doc.at("integrator");
    if (!in.is_object()) throw ParseError("integrator: expected an object");
    if (in.contains("h")) sc.integrator.step = number(in.at("h"), "integrator.h");
    if (in.contains("tie_tol")) sc.integrator.tie_tol = number(in.at("tie_tol"), "integrator.tie_tol");
    if (in.contains("mode")) {
      try {
        sc.integrator.mode = parse_mode(text(in.at("mode"), "integrator.mode"));
      } catch (const ParseError& e) {
        throw ParseError(std::string("integrator.mode: ") + e.what());
      }
    }
    if (!(sc.integrator.step > 0.0)) problems.push_back("integrator.h must be positive");
    if (!(sc.integrator.tie_tol > 0.0)) problems.push_back("integrator.tie_tol must be positive");
  }

  if (doc.contains("scales")) {
    const auto& s = doc.at("scales");
    if (!s.is_array()) throw ParseError("scales: expected an array of integers");
    sc.scales.clear();
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!s[i].is_number_integer() || s[i].get<long long>() <= 0) {
        throw ParseError("scales[" + std::to_string(i) + "]: expected a positive integer");
      }
      sc.scales.push_back(s[i].get<std::uint64_t>());
    }
  }

  if (doc.contains("seeds")) {
    const auto& s = doc.at("seeds");
    if (!s.is_number_integer() || s.get<long long>() <= 0) throw ParseError("seeds: expected a positive integer");
    sc.seeds = s.get<std::size_t>();
  }

  if (doc.contains("policy")) {
    try {
      sc.policy = parse_policy(text(doc.at("policy"), "policy"));
    } catch (const ParseError& e) {
      throw ParseError(std::string("policy: ") + e.what());
    }
  }

  if (!problems.empty()) throw ValidationError("invalid scenario", problems);
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

}  // namespace gmsr
