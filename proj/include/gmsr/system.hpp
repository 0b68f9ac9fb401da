#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gmsr/service_rate.hpp"

namespace gmsr {

struct Frontend {
  std::string id;
  double lambda = 0.0;  // jobs per unit time
};

struct Backend {
  std::string id;
  ServiceRateFn service;
};

/// Unvalidated system as read from a scenario or built by hand.
struct SystemDescription {
  std::vector<Frontend> frontends;
  std::vector<Backend> backends;
  std::vector<std::pair<std::string, std::string>> edges;  // (frontend id, backend id)
};

/// Lists every violated structural invariant; an empty report means valid.
std::vector<std::string> validate_system(const SystemDescription& desc);

struct Edge {
  std::size_t frontend;
  std::size_t backend;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Per-backend workload N_b >= 0 (jobs), indexed by dense backend index.
using WorkloadVector = std::vector<double>;
/// Per-backend gradient mu'_b, indexed by dense backend index.
using GradientVector = std::vector<double>;

/// Validated bipartite frontend/backend system. Indices are dense and follow
/// the input order of the description. Immutable.
class BipartiteSystem {
 public:
  /// Throws ValidationError listing every violation when the description is invalid.
  explicit BipartiteSystem(SystemDescription desc);

  std::size_t num_frontends() const noexcept { return desc_.frontends.size(); }
  std::size_t num_backends() const noexcept { return desc_.backends.size(); }

  const Frontend& frontend(std::size_t f) const { return desc_.frontends.at(f); }
  const Backend& backend(std::size_t b) const { return desc_.backends.at(b); }
  double lambda(std::size_t f) const { return desc_.frontends[f].lambda; }
  const ServiceRateFn& service(std::size_t b) const { return desc_.backends[b].service; }

  /// B(f), ascending backend indices.
  std::span<const std::size_t> backends_of(std::size_t f) const { return backends_of_[f]; }
  /// F(b), ascending frontend indices.
  std::span<const std::size_t> frontends_of(std::size_t b) const { return frontends_of_[b]; }
  /// Edges sorted by (frontend, backend).
  std::span<const Edge> edges() const noexcept { return edges_; }
  bool connected(std::size_t f, std::size_t b) const;

  std::optional<std::size_t> frontend_index(std::string_view id) const;
  std::optional<std::size_t> backend_index(std::string_view id) const;

  double total_arrival_rate() const noexcept;
  std::vector<double> arrival_rates() const;
  std::vector<double> capacities() const;

  const SystemDescription& description() const noexcept { return desc_; }

  /// Subsystem on the given frontends and backends keeping only the edges
  /// between them. Throws ValidationError if that isolates a node.
  BipartiteSystem restricted(std::span<const std::size_t> frontends,
                             std::span<const std::size_t> backends) const;
  BipartiteSystem with_arrival_rates(std::span<const double> lambdas) const;

 private:
  SystemDescription desc_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> backends_of_;
  std::vector<std::vector<std::size_t>> frontends_of_;
};

/// Routing proportions x_{f,b}, stored densely (frontends x backends).
class RoutingMatrix {
 public:
  RoutingMatrix() = default;
  RoutingMatrix(std::size_t frontends, std::size_t backends)
      : frontends_(frontends), backends_(backends), data_(frontends * backends, 0.0) {}

  std::size_t frontends() const noexcept { return frontends_; }
  std::size_t backends() const noexcept { return backends_; }

  double operator()(std::size_t f, std::size_t b) const { return data_[f * backends_ + b]; }
  double& operator()(std::size_t f, std::size_t b) { return data_[f * backends_ + b]; }

  std::span<const double> row(std::size_t f) const {
    return std::span<const double>(data_).subspan(f * backends_, backends_);
  }
  std::span<double> row(std::size_t f) { return std::span<double>(data_).subspan(f * backends_, backends_); }

  friend bool operator==(const RoutingMatrix&, const RoutingMatrix&) = default;

 private:
  std::size_t frontends_ = 0;
  std::size_t backends_ = 0;
  std::vector<double> data_;
};

/// Violations of the routing invariants: support on E, nonnegativity, and
/// unit row sums within tol.
std::vector<std::string> validate_routing(const BipartiteSystem& sys, const RoutingMatrix& x,
                                          double tol = 1e-12);

/// Inflow sum_f lambda_f x_{f,b} per backend.
std::vector<double> inflows(const BipartiteSystem& sys, const RoutingMatrix& x);
std::vector<double> service_rates(const BipartiteSystem& sys, std::span<const double> workload);
GradientVector gradients(const BipartiteSystem& sys, std::span<const double> workload);

void require_backend_dimension(const BipartiteSystem& sys, std::size_t n, const char* what);
void require_routing_dimension(const BipartiteSystem& sys, const RoutingMatrix& x, const char* what);

}  // namespace gmsr
