#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "gmsr/system.hpp"

namespace gmsr {

struct FlowArc {
  std::size_t from;
  std::size_t to;
  double capacity;  // may be FlowNetwork::kInfinite
};

/// Directed network with one source and one sink. Infinite capacities are
/// replaced during solves by a finite surrogate that exceeds the sum of all
/// finite capacities.
class FlowNetwork {
 public:
  static constexpr double kInfinite = std::numeric_limits<double>::infinity();

  FlowNetwork(std::size_t nodes, std::size_t source, std::size_t sink);

  std::size_t add_arc(std::size_t from, std::size_t to, double capacity);

  std::size_t num_nodes() const noexcept { return nodes_; }
  std::size_t source() const noexcept { return source_; }
  std::size_t sink() const noexcept { return sink_; }
  std::span<const FlowArc> arcs() const noexcept { return arcs_; }

 private:
  std::size_t nodes_;
  std::size_t source_;
  std::size_t sink_;
  std::vector<FlowArc> arcs_;
};

struct MaxFlowResult {
  double value = 0.0;
  std::vector<double> flow;           // per arc, in insertion order
  std::vector<bool> source_side;      // reachable from the source in the residual graph
  std::vector<bool> reaches_sink;     // can reach the sink in the residual graph
};

/// Edmonds-Karp. Residual capacities at or below a scale-relative epsilon
/// (1e-12 times the largest finite capacity, at least 1e-12) count as saturated.
MaxFlowResult max_flow(const FlowNetwork& net);

/// Source -> frontends (lambda_f) -> backends (infinite) -> sink (backend_caps).
/// Node layout: 0 = source, 1 = sink, 2 + f, 2 + F + b.
struct AugmentedNetwork {
  FlowNetwork network;
  std::size_t num_frontends;
  std::vector<std::size_t> source_arc;  // per frontend
  std::vector<std::size_t> sink_arc;    // per backend
  std::vector<std::size_t> edge_arc;    // parallel to sys.edges()

  std::size_t frontend_node(std::size_t f) const { return 2 + f; }
  std::size_t backend_node(std::size_t b) const { return 2 + num_frontends + b; }
};
AugmentedNetwork augmented_network(const BipartiteSystem& sys, std::span<const double> backend_caps);

/// True iff every nonempty frontend subset P satisfies
/// sum_P lambda_f < sum_{b in B(P)} mu_b(infinity).
bool feasibility_check(const BipartiteSystem& sys);

/// Frontends that cannot reach the sink in the residual graph of a maximum
/// flow with caps mu_b(infinity); nonempty exactly when the system is
/// infeasible, and then a violating subset.
std::vector<std::size_t> infeasible_frontends(const BipartiteSystem& sys);

/// Split into the stabilizable part (F~, B~) and the overloaded remainder.
struct StabilityDecomposition {
  std::vector<std::size_t> frontends;  // F~, ascending
  std::vector<std::size_t> backends;   // B~, ascending

  friend bool operator==(const StabilityDecomposition&, const StabilityDecomposition&) = default;
};
StabilityDecomposition stability_decomposition(const BipartiteSystem& sys);

/// Maximum total throughput; the max-flow value with backend caps mu_b(infinity).
double opt_tp(const BipartiteSystem& sys);

struct TransportResult {
  bool feasible = false;
  RoutingMatrix witness;  // rows outside the frontend set are zero
};

/// Whether frontends F can send all of their arrivals over edges inside
/// (F, B) so backend b receives exactly demand[b]. demand is indexed by
/// backend over the whole system; entries outside B must be zero.
TransportResult transportation_feasible(const BipartiteSystem& sys, std::span<const std::size_t> frontends,
                                        std::span<const std::size_t> backends, std::span<const double> demand);

/// Same decision on an explicit local problem. Edges index into the local
/// supply and demand arrays. On success, fills shares (parallel to edges)
/// with x_{f,b} for each listed edge.
bool transport_shares(std::span<const double> supply, std::span<const double> demand,
                      std::span<const Edge> edges, std::vector<double>& shares);

}  // namespace gmsr
