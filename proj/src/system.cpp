#include "gmsr/system.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>

#include "gmsr/errors.hpp"

namespace gmsr {

std::vector<std::string> validate_system(const SystemDescription& desc) {
  std::vector<std::string> report;
  std::unordered_map<std::string, std::size_t> fidx;
  std::unordered_map<std::string, std::size_t> bidx;

  for (std::size_t f = 0; f < desc.frontends.size(); ++f) {
    const auto& fe = desc.frontends[f];
    if (!fidx.emplace(fe.id, f).second) {
      report.push_back("duplicate frontend id '" + fe.id + "'");
    }
    if (!(fe.lambda >= 0.0) || !std::isfinite(fe.lambda)) {
      report.push_back("frontend '" + fe.id + "' has negative or non-finite arrival rate " +
                       std::to_string(fe.lambda));
    }
  }
  for (std::size_t b = 0; b < desc.backends.size(); ++b) {
    const auto& be = desc.backends[b];
    if (!bidx.emplace(be.id, b).second) {
      report.push_back("duplicate backend id '" + be.id + "'");
    }
    if (fidx.contains(be.id)) {
      report.push_back("id '" + be.id + "' names both a frontend and a backend");
    }
  }

  std::vector<bool> f_used(desc.frontends.size(), false);
  std::vector<bool> b_used(desc.backends.size(), false);
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& [fid, bid] : desc.edges) {
    const auto fit = fidx.find(fid);
    const auto bit = bidx.find(bid);
    if (fit == fidx.end()) {
      report.push_back("edge (" + fid + ", " + bid + ") references unknown frontend '" + fid + "'");
    }
    if (bit == bidx.end()) {
      report.push_back("edge (" + fid + ", " + bid + ") references unknown backend '" + bid + "'");
    }
    if (!seen.emplace(fid, bid).second) {
      report.push_back("duplicate edge (" + fid + ", " + bid + ")");
    }
    if (fit != fidx.end() && bit != bidx.end()) {
      f_used[fit->second] = true;
      b_used[bit->second] = true;
    }
  }
  for (std::size_t f = 0; f < desc.frontends.size(); ++f) {
    if (!f_used[f]) report.push_back("frontend '" + desc.frontends[f].id + "' is isolated");
  }
  for (std::size_t b = 0; b < desc.backends.size(); ++b) {
    if (!b_used[b]) report.push_back("backend '" + desc.backends[b].id + "' is isolated");
  }
  return report;
}

BipartiteSystem::BipartiteSystem(SystemDescription desc) : desc_(std::move(desc)) {
  auto report = validate_system(desc_);
  if (!report.empty()) {
    throw ValidationError("invalid bipartite system (" + std::to_string(report.size()) + " violations)",
                          std::move(report));
  }
  backends_of_.resize(num_frontends());
  frontends_of_.resize(num_backends());
  for (const auto& [fid, bid] : desc_.edges) {
    edges_.push_back({*frontend_index(fid), *backend_index(bid)});
  }
  std::sort(edges_.begin(), edges_.end());
  for (const auto& e : edges_) {
    backends_of_[e.frontend].push_back(e.backend);
    frontends_of_[e.backend].push_back(e.frontend);
  }
  for (auto& fs : frontends_of_) std::sort(fs.begin(), fs.end());
}

bool BipartiteSystem::connected(std::size_t f, std::size_t b) const {
  const auto& bs = backends_of_.at(f);
  return std::binary_search(bs.begin(), bs.end(), b);
}

std::optional<std::size_t> BipartiteSystem::frontend_index(std::string_view id) const {
  for (std::size_t f = 0; f < desc_.frontends.size(); ++f) {
    if (desc_.frontends[f].id == id) return f;
  }
  return std::nullopt;
}

std::optional<std::size_t> BipartiteSystem::backend_index(std::string_view id) const {
  for (std::size_t b = 0; b < desc_.backends.size(); ++b) {
    if (desc_.backends[b].id == id) return b;
  }
  return std::nullopt;
}

double BipartiteSystem::total_arrival_rate() const noexcept {
  double total = 0.0;
  for (const auto& fe : desc_.frontends) total += fe.lambda;
  return total;
}

std::vector<double> BipartiteSystem::arrival_rates() const {
  std::vector<double> out;
  out.reserve(num_frontends());
  for (const auto& fe : desc_.frontends) out.push_back(fe.lambda);
  return out;
}

std::vector<double> BipartiteSystem::capacities() const {
  std::vector<double> out;
  out.reserve(num_backends());
  for (const auto& be : desc_.backends) out.push_back(be.service.cap());
  return out;
}

BipartiteSystem BipartiteSystem::restricted(std::span<const std::size_t> frontends,
                                            std::span<const std::size_t> backends) const {
  SystemDescription sub;
  std::vector<bool> keep_f(num_frontends(), false);
  std::vector<bool> keep_b(num_backends(), false);
  for (auto f : frontends) {
    keep_f.at(f) = true;
  }
  for (auto b : backends) {
    keep_b.at(b) = true;
  }
  for (std::size_t f = 0; f < num_frontends(); ++f) {
    if (keep_f[f]) sub.frontends.push_back(desc_.frontends[f]);
  }
  for (std::size_t b = 0; b < num_backends(); ++b) {
    if (keep_b[b]) sub.backends.push_back(desc_.backends[b]);
  }
  for (const auto& e : edges_) {
    if (keep_f[e.frontend] && keep_b[e.backend]) {
      sub.edges.emplace_back(desc_.frontends[e.frontend].id, desc_.backends[e.backend].id);
    }
  }
  return BipartiteSystem(std::move(sub));
}

BipartiteSystem BipartiteSystem::with_arrival_rates(std::span<const double> lambdas) const {
  if (lambdas.size() != num_frontends()) {
    throw DimensionError("with_arrival_rates: expected " + std::to_string(num_frontends()) + " rates");
  }
  SystemDescription copy = desc_;
  for (std::size_t f = 0; f < lambdas.size(); ++f) copy.frontends[f].lambda = lambdas[f];
  return BipartiteSystem(std::move(copy));
}

void require_backend_dimension(const BipartiteSystem& sys, std::size_t n, const char* what) {
  if (n != sys.num_backends()) {
    throw DimensionError(std::string(what) + ": expected " + std::to_string(sys.num_backends()) +
                         " backend entries, got " + std::to_string(n));
  }
}

void require_routing_dimension(const BipartiteSystem& sys, const RoutingMatrix& x, const char* what) {
  if (x.frontends() != sys.num_frontends() || x.backends() != sys.num_backends()) {
    throw DimensionError(std::string(what) + ": routing matrix shape does not match the system");
  }
}

std::vector<std::string> validate_routing(const BipartiteSystem& sys, const RoutingMatrix& x, double tol) {
  require_routing_dimension(sys, x, "validate_routing");
  std::vector<std::string> report;
  for (std::size_t f = 0; f < sys.num_frontends(); ++f) {
    double sum = 0.0;
    for (std::size_t b = 0; b < sys.num_backends(); ++b) {
      const double v = x(f, b);
      if (v < 0.0 || !std::isfinite(v)) {
        report.push_back("x[" + sys.frontend(f).id + "," + sys.backend(b).id + "] is negative or non-finite");
      }
      if (v != 0.0 && !sys.connected(f, b)) {
        report.push_back("x[" + sys.frontend(f).id + "," + sys.backend(b).id + "] routes over a missing edge");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > tol) {
      report.push_back("row " + sys.frontend(f).id + " sums to " + std::to_string(sum));
    }
  }
  return report;
}

std::vector<double> inflows(const BipartiteSystem& sys, const RoutingMatrix& x) {
  require_routing_dimension(sys, x, "inflows");
  std::vector<double> w(sys.num_backends(), 0.0);
  for (const auto& e : sys.edges()) {
    w[e.backend] += sys.lambda(e.frontend) * x(e.frontend, e.backend);
  }
  return w;
}

std::vector<double> service_rates(const BipartiteSystem& sys, std::span<const double> workload) {
  require_backend_dimension(sys, workload.size(), "service_rates");
  std::vector<double> out(workload.size());
  for (std::size_t b = 0; b < workload.size(); ++b) out[b] = sys.service(b).rate(workload[b]);
  return out;
}

GradientVector gradients(const BipartiteSystem& sys, std::span<const double> workload) {
  require_backend_dimension(sys, workload.size(), "gradients");
  GradientVector out(workload.size());
  for (std::size_t b = 0; b < workload.size(); ++b) out[b] = sys.service(b).gradient(workload[b]);
  return out;
}

}  // namespace gmsr
