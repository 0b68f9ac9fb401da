#include "gmsr/tiers.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "gmsr/errors.hpp"

namespace gmsr {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t v) {
    while (parent_[v] != v) {
      parent_[v] = parent_[parent_[v]];
      v = parent_[v];
    }
    return v;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

void check_inputs(const BipartiteSystem& sys, std::span<const double> grads, double tie_tol) {
  if (grads.size() != sys.num_backends()) {
    throw DimensionError("gradient vector has " + std::to_string(grads.size()) + " entries, system has " +
                         std::to_string(sys.num_backends()) + " backends");
  }
  if (!(tie_tol > 0.0)) {
    throw std::invalid_argument("tie tolerance must be positive");
  }
}

double best_gradient(const BipartiteSystem& sys, std::span<const double> grads, std::size_t f) {
  double best = -std::numeric_limits<double>::infinity();
  for (auto b : sys.backends_of(f)) best = std::max(best, grads[b]);
  return best;
}

// Components over the node subset; frontends occupy slots [0, F), backends [F, F+B).
TierPartition components(const BipartiteSystem& sys, std::span<const double> grads, double tie_tol,
                         std::span<const std::size_t> frontends, std::span<const std::size_t> backends) {
  const std::size_t nf = sys.num_frontends();
  std::vector<bool> in_b(sys.num_backends(), false);
  for (auto b : backends) in_b[b] = true;

  DisjointSets sets(nf + sys.num_backends());
  for (auto f : frontends) {
    const double top = best_gradient(sys, grads, f);
    for (auto b : sys.backends_of(f)) {
      if (grads[b] >= top - tie_tol && in_b[b]) sets.unite(f, nf + b);
    }
  }

  std::vector<std::size_t> slot(nf + sys.num_backends(), kNone);
  TierPartition out;
  auto tier_for = [&](std::size_t node) -> Tier& {
    const std::size_t root = sets.find(node);
    if (slot[root] == kNone) {
      slot[root] = out.tiers.size();
      out.tiers.emplace_back();
    }
    return out.tiers[slot[root]];
  };
  // Frontends first then backends, both ascending, so tier order is canonical.
  std::vector<std::size_t> fs(frontends.begin(), frontends.end());
  std::vector<std::size_t> bs(backends.begin(), backends.end());
  std::sort(fs.begin(), fs.end());
  std::sort(bs.begin(), bs.end());
  for (auto f : fs) tier_for(f).frontends.push_back(f);
  for (auto b : bs) tier_for(nf + b).backends.push_back(b);

  for (auto& tier : out.tiers) {
    double sum = 0.0;
    for (auto b : tier.backends) sum += grads[b];
    tier.gradient = tier.backends.empty() ? 0.0 : sum / static_cast<double>(tier.backends.size());
  }
  return out;
}

}  // namespace

std::vector<Edge> best_backend_graph(const BipartiteSystem& sys, std::span<const double> grads,
                                     double tie_tol) {
  check_inputs(sys, grads, tie_tol);
  std::vector<Edge> out;
  for (std::size_t f = 0; f < sys.num_frontends(); ++f) {
    const double top = best_gradient(sys, grads, f);
    for (auto b : sys.backends_of(f)) {
      if (grads[b] >= top - tie_tol) out.push_back({f, b});
    }
  }
  return out;
}

TierPartition compute_tiers(const BipartiteSystem& sys, std::span<const double> grads, double tie_tol) {
  check_inputs(sys, grads, tie_tol);
  std::vector<std::size_t> fs(sys.num_frontends());
  std::vector<std::size_t> bs(sys.num_backends());
  std::iota(fs.begin(), fs.end(), 0);
  std::iota(bs.begin(), bs.end(), 0);
  return components(sys, grads, tie_tol, fs, bs);
}

TierPartition compute_tiers(const BipartiteSystem& sys, std::span<const double> grads, double tie_tol,
                            const Tier& within) {
  check_inputs(sys, grads, tie_tol);
  return components(sys, grads, tie_tol, within.frontends, within.backends);
}

bool TierGraph::has_arc(std::size_t from, std::size_t to) const {
  const auto& succ = successors_.at(from);
  return std::binary_search(succ.begin(), succ.end(), to);
}

void TierGraph::add_arc(std::size_t from, std::size_t to) {
  auto& succ = successors_.at(from);
  const auto it = std::lower_bound(succ.begin(), succ.end(), to);
  if (it == succ.end() || *it != to) succ.insert(it, to);
}

std::vector<std::pair<std::size_t, std::size_t>> TierGraph::arcs() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t v = 0; v < successors_.size(); ++v) {
    for (auto w : successors_[v]) out.emplace_back(v, w);
  }
  return out;
}

TierMembership tier_membership(const BipartiteSystem& sys, const TierPartition& partition) {
  TierMembership m{std::vector<std::size_t>(sys.num_frontends(), kNone),
                   std::vector<std::size_t>(sys.num_backends(), kNone)};
  for (std::size_t i = 0; i < partition.size(); ++i) {
    for (auto f : partition[i].frontends) {
      if (f >= sys.num_frontends() || m.of_frontend[f] != kNone) {
        throw std::invalid_argument("partition lists frontend " + std::to_string(f) + " twice or out of range");
      }
      m.of_frontend[f] = i;
    }
    for (auto b : partition[i].backends) {
      if (b >= sys.num_backends() || m.of_backend[b] != kNone) {
        throw std::invalid_argument("partition lists backend " + std::to_string(b) + " twice or out of range");
      }
      m.of_backend[b] = i;
    }
  }
  for (std::size_t f = 0; f < sys.num_frontends(); ++f) {
    if (m.of_frontend[f] == kNone) {
      throw std::invalid_argument("partition does not cover frontend '" + sys.frontend(f).id + "'");
    }
  }
  for (std::size_t b = 0; b < sys.num_backends(); ++b) {
    if (m.of_backend[b] == kNone) {
      throw std::invalid_argument("partition does not cover backend '" + sys.backend(b).id + "'");
    }
  }
  return m;
}

TierGraph tier_graph(const BipartiteSystem& sys, const TierPartition& partition) {
  const auto m = tier_membership(sys, partition);
  TierGraph graph(partition.size());
  for (const auto& e : sys.edges()) {
    const std::size_t i = m.of_frontend[e.frontend];
    const std::size_t j = m.of_backend[e.backend];
    if (i != j) graph.add_arc(i, j);
  }
  return graph;
}

bool reach(const TierGraph& graph, std::size_t i, std::size_t j) {
  if (i >= graph.size() || j >= graph.size()) {
    throw std::out_of_range("reach: tier index out of range");
  }
  std::vector<bool> seen(graph.size(), false);
  std::deque<std::size_t> queue;
  for (auto w : graph.successors(i)) {
    if (!seen[w]) {
      seen[w] = true;
      queue.push_back(w);
    }
  }
  while (!queue.empty()) {
    const auto v = queue.front();
    queue.pop_front();
    if (v == j) return i != j;
    for (auto w : graph.successors(v)) {
      if (!seen[w]) {
        seen[w] = true;
        queue.push_back(w);
      }
    }
  }
  return false;
}

bool is_acyclic(const TierGraph& graph) {
  std::vector<std::size_t> indegree(graph.size(), 0);
  for (std::size_t v = 0; v < graph.size(); ++v) {
    for (auto w : graph.successors(v)) ++indegree[w];
  }
  std::vector<std::size_t> ready;
  for (std::size_t v = 0; v < graph.size(); ++v) {
    if (indegree[v] == 0) ready.push_back(v);
  }
  std::size_t visited = 0;
  while (!ready.empty()) {
    const auto v = ready.back();
    ready.pop_back();
    ++visited;
    for (auto w : graph.successors(v)) {
      if (--indegree[w] == 0) ready.push_back(w);
    }
  }
  return visited == graph.size();
}

}  // namespace gmsr
