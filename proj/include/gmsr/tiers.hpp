#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "gmsr/system.hpp"

namespace gmsr {

/// A connected component (F, B) of the best backend graph. F may be empty,
/// in which case B holds a single backend that no frontend prefers.
struct Tier {
  std::vector<std::size_t> frontends;
  std::vector<std::size_t> backends;
  double gradient = 0.0;  // mean gradient over the tier's backends

  friend bool operator==(const Tier&, const Tier&) = default;
};

/// Tiers are ordered by the first node they contain, scanning frontends in
/// index order and then backends.
struct TierPartition {
  std::vector<Tier> tiers;

  std::size_t size() const noexcept { return tiers.size(); }
  const Tier& operator[](std::size_t i) const { return tiers[i]; }
};

/// Edges (f, b) in E with g_b >= max_{j in B(f)} g_j - tie_tol, sorted.
std::vector<Edge> best_backend_graph(const BipartiteSystem& sys, std::span<const double> grads,
                                     double tie_tol);

TierPartition compute_tiers(const BipartiteSystem& sys, std::span<const double> grads, double tie_tol);

/// Re-partitions the nodes of one tier under a (typically tighter) tolerance.
/// Best backends are still taken over each frontend's full neighbourhood.
TierPartition compute_tiers(const BipartiteSystem& sys, std::span<const double> grads, double tie_tol,
                            const Tier& within);

/// Condensed precedence graph on tiers: v_i -> v_j when some f in F_i has an
/// edge of E to some b in B_j, i != j.
class TierGraph {
 public:
  explicit TierGraph(std::size_t vertices) : successors_(vertices) {}

  std::size_t size() const noexcept { return successors_.size(); }
  std::span<const std::size_t> successors(std::size_t v) const { return successors_.at(v); }
  bool has_arc(std::size_t from, std::size_t to) const;
  std::vector<std::pair<std::size_t, std::size_t>> arcs() const;

  void add_arc(std::size_t from, std::size_t to);

 private:
  std::vector<std::vector<std::size_t>> successors_;
};

/// Throws std::invalid_argument if the partition does not cover every node
/// exactly once.
TierGraph tier_graph(const BipartiteSystem& sys, const TierPartition& partition);

/// Whether a nonempty directed path leads from i to j; reach(i, i) is false.
bool reach(const TierGraph& graph, std::size_t i, std::size_t j);

bool is_acyclic(const TierGraph& graph);

/// Tier index of every frontend and backend. Throws std::invalid_argument if
/// a node is missing or appears twice.
struct TierMembership {
  std::vector<std::size_t> of_frontend;
  std::vector<std::size_t> of_backend;
};
TierMembership tier_membership(const BipartiteSystem& sys, const TierPartition& partition);

}  // namespace gmsr
