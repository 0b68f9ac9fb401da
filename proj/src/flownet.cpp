#include "gmsr/flownet.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <stdexcept>
#include <string>

#include "gmsr/errors.hpp"

namespace gmsr {

namespace {

constexpr std::size_t kMaxAugmentations = 1'000'000;
constexpr std::size_t kUnvisited = static_cast<std::size_t>(-1);

// Residual arcs come in pairs: 2k is forward arc k, 2k+1 its reverse.
struct Residual {
  std::vector<std::size_t> head;
  std::vector<double> cap;
  std::vector<std::vector<std::size_t>> out;
};

Residual build_residual(const FlowNetwork& net, double surrogate) {
  Residual r;
  r.out.resize(net.num_nodes());
  r.head.reserve(2 * net.arcs().size());
  r.cap.reserve(2 * net.arcs().size());
  for (const auto& a : net.arcs()) {
    const std::size_t id = r.head.size();
    r.head.push_back(a.to);
    r.cap.push_back(std::isinf(a.capacity) ? surrogate : a.capacity);
    r.head.push_back(a.from);
    r.cap.push_back(0.0);
    r.out[a.from].push_back(id);
    r.out[a.to].push_back(id + 1);
  }
  return r;
}

}  // namespace

FlowNetwork::FlowNetwork(std::size_t nodes, std::size_t source, std::size_t sink)
    : nodes_(nodes), source_(source), sink_(sink) {
  if (source >= nodes || sink >= nodes || source == sink) {
    throw std::invalid_argument("flow network needs distinct source and sink inside the node range");
  }
}

std::size_t FlowNetwork::add_arc(std::size_t from, std::size_t to, double capacity) {
  if (from >= nodes_ || to >= nodes_) {
    throw std::out_of_range("flow arc endpoint out of range");
  }
  if (!(capacity >= 0.0)) {
    throw DomainError("flow arc capacity must be nonnegative");
  }
  arcs_.push_back({from, to, capacity});
  return arcs_.size() - 1;
}

MaxFlowResult max_flow(const FlowNetwork& net) {
  double finite_sum = 0.0;
  double largest = 0.0;
  for (const auto& a : net.arcs()) {
    if (!std::isinf(a.capacity)) {
      finite_sum += a.capacity;
      largest = std::max(largest, a.capacity);
    }
  }
  const double surrogate = finite_sum + 1.0;
  const double eps = 1e-12 * std::max(1.0, largest);

  Residual r = build_residual(net, surrogate);
  const std::size_t n = net.num_nodes();
  const std::size_t s = net.source();
  const std::size_t t = net.sink();

  MaxFlowResult result;
  std::vector<std::size_t> via(n);
  std::deque<std::size_t> queue;
  for (std::size_t round = 0; round < kMaxAugmentations; ++round) {
    std::fill(via.begin(), via.end(), kUnvisited);
    via[s] = kUnvisited - 1;
    queue.assign(1, s);
    while (!queue.empty() && via[t] == kUnvisited) {
      const auto u = queue.front();
      queue.pop_front();
      for (auto id : r.out[u]) {
        const auto v = r.head[id];
        if (via[v] == kUnvisited && r.cap[id] > eps) {
          via[v] = id;
          queue.push_back(v);
        }
      }
    }
    if (via[t] == kUnvisited) break;

    double bottleneck = surrogate;
    for (auto v = t; v != s; v = r.head[via[v] ^ 1]) bottleneck = std::min(bottleneck, r.cap[via[v]]);
    if (bottleneck < 1e-12) break;
    for (auto v = t; v != s; v = r.head[via[v] ^ 1]) {
      r.cap[via[v]] -= bottleneck;
      r.cap[via[v] ^ 1] += bottleneck;
    }
    result.value += bottleneck;
  }

  result.flow.resize(net.arcs().size());
  for (std::size_t k = 0; k < net.arcs().size(); ++k) result.flow[k] = r.cap[2 * k + 1];

  // Forward search from s and backward search to t over positive residual arcs.
  result.source_side.assign(n, false);
  result.source_side[s] = true;
  queue.assign(1, s);
  while (!queue.empty()) {
    const auto u = queue.front();
    queue.pop_front();
    for (auto id : r.out[u]) {
      const auto v = r.head[id];
      if (!result.source_side[v] && r.cap[id] > eps) {
        result.source_side[v] = true;
        queue.push_back(v);
      }
    }
  }
  result.reaches_sink.assign(n, false);
  result.reaches_sink[t] = true;
  queue.assign(1, t);
  while (!queue.empty()) {
    const auto v = queue.front();
    queue.pop_front();
    // Residual arc u -> v is the partner of an arc stored at v pointing to u.
    for (auto back : r.out[v]) {
      const auto u = r.head[back];
      if (!result.reaches_sink[u] && r.cap[back ^ 1] > eps) {
        result.reaches_sink[u] = true;
        queue.push_back(u);
      }
    }
  }
  return result;
}

AugmentedNetwork augmented_network(const BipartiteSystem& sys, std::span<const double> backend_caps) {
  require_backend_dimension(sys, backend_caps.size(), "augmented_network");
  const std::size_t nf = sys.num_frontends();
  AugmentedNetwork aug{FlowNetwork(2 + nf + sys.num_backends(), 0, 1), nf, {}, {}, {}};
  for (std::size_t f = 0; f < nf; ++f) {
    aug.source_arc.push_back(aug.network.add_arc(0, aug.frontend_node(f), sys.lambda(f)));
  }
  for (const auto& e : sys.edges()) {
    aug.edge_arc.push_back(
        aug.network.add_arc(aug.frontend_node(e.frontend), aug.backend_node(e.backend), FlowNetwork::kInfinite));
  }
  for (std::size_t b = 0; b < sys.num_backends(); ++b) {
    aug.sink_arc.push_back(aug.network.add_arc(aug.backend_node(b), 1, backend_caps[b]));
  }
  return aug;
}

std::vector<std::size_t> infeasible_frontends(const BipartiteSystem& sys) {
  const auto aug = augmented_network(sys, sys.capacities());
  const auto mf = max_flow(aug.network);
  std::vector<std::size_t> stuck;
  for (std::size_t f = 0; f < sys.num_frontends(); ++f) {
    if (!mf.reaches_sink[aug.frontend_node(f)]) stuck.push_back(f);
  }
  return stuck;
}

bool feasibility_check(const BipartiteSystem& sys) { return infeasible_frontends(sys).empty(); }

StabilityDecomposition stability_decomposition(const BipartiteSystem& sys) {
  const auto aug = augmented_network(sys, sys.capacities());
  const auto mf = max_flow(aug.network);
  StabilityDecomposition d;
  std::vector<bool> stable_f(sys.num_frontends(), false);
  for (std::size_t f = 0; f < sys.num_frontends(); ++f) {
    if (mf.reaches_sink[aug.frontend_node(f)]) {
      stable_f[f] = true;
      d.frontends.push_back(f);
    }
  }
  for (std::size_t b = 0; b < sys.num_backends(); ++b) {
    const auto fs = sys.frontends_of(b);
    if (std::all_of(fs.begin(), fs.end(), [&](std::size_t f) { return stable_f[f]; })) d.backends.push_back(b);
  }
  return d;
}

double opt_tp(const BipartiteSystem& sys) {
  const auto aug = augmented_network(sys, sys.capacities());
  return max_flow(aug.network).value;
}

bool transport_shares(std::span<const double> supply, std::span<const double> demand, std::span<const Edge> edges,
                      std::vector<double>& shares) {
  for (double d : demand) {
    if (!(d >= 0.0)) throw DomainError("transportation demand must be nonnegative");
  }
  const double total_supply = std::accumulate(supply.begin(), supply.end(), 0.0);
  const double total_demand = std::accumulate(demand.begin(), demand.end(), 0.0);
  const double tol = 1e-9 * (1.0 + total_supply);
  if (std::abs(total_supply - total_demand) > tol) return false;

  const std::size_t nf = supply.size();
  FlowNetwork net(2 + nf + demand.size(), 0, 1);
  for (std::size_t f = 0; f < nf; ++f) net.add_arc(0, 2 + f, supply[f]);
  std::vector<std::size_t> degree(nf, 0);
  for (const auto& e : edges) {
    net.add_arc(2 + e.frontend, 2 + nf + e.backend, FlowNetwork::kInfinite);
    ++degree[e.frontend];
  }
  for (std::size_t b = 0; b < demand.size(); ++b) net.add_arc(2 + nf + b, 1, demand[b]);
  for (std::size_t f = 0; f < nf; ++f) {
    if (degree[f] == 0) return false;
  }

  const auto mf = max_flow(net);
  if (std::abs(mf.value - total_supply) > tol) return false;

  shares.assign(edges.size(), 0.0);
  std::vector<double> routed(nf, 0.0);
  for (std::size_t k = 0; k < edges.size(); ++k) routed[edges[k].frontend] += mf.flow[nf + k];
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const auto f = edges[k].frontend;
    shares[k] = routed[f] > 0.0 ? mf.flow[nf + k] / routed[f] : 1.0 / static_cast<double>(degree[f]);
  }
  return true;
}

TransportResult transportation_feasible(const BipartiteSystem& sys, std::span<const std::size_t> frontends,
                                        std::span<const std::size_t> backends, std::span<const double> demand) {
  require_backend_dimension(sys, demand.size(), "transportation_feasible");
  std::vector<std::size_t> local_b(sys.num_backends(), kUnvisited);
  for (std::size_t k = 0; k < backends.size(); ++k) local_b.at(backends[k]) = k;
  for (std::size_t b = 0; b < sys.num_backends(); ++b) {
    if (!(demand[b] >= 0.0)) throw DomainError("transportation demand must be nonnegative");
    if (local_b[b] == kUnvisited && demand[b] != 0.0) {
      throw std::invalid_argument("demand placed on backend '" + sys.backend(b).id + "' outside the backend set");
    }
  }

  std::vector<double> supply;
  std::vector<Edge> local_edges;
  std::vector<Edge> global_edges;
  for (std::size_t k = 0; k < frontends.size(); ++k) {
    const auto f = frontends[k];
    supply.push_back(sys.lambda(f));
    for (auto b : sys.backends_of(f)) {
      if (local_b[b] != kUnvisited) {
        local_edges.push_back({k, local_b[b]});
        global_edges.push_back({f, b});
      }
    }
  }
  std::vector<double> local_demand;
  for (auto b : backends) local_demand.push_back(demand[b]);

  TransportResult result;
  std::vector<double> shares;
  result.feasible = transport_shares(supply, local_demand, local_edges, shares);
  result.witness = RoutingMatrix(sys.num_frontends(), sys.num_backends());
  if (result.feasible) {
    for (std::size_t k = 0; k < global_edges.size(); ++k) {
      result.witness(global_edges[k].frontend, global_edges[k].backend) = shares[k];
    }
  }
  return result;
}

}  // namespace gmsr
