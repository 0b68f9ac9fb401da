#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls the solver it is meant to check.

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "gmsr/flownet.hpp"
#include "gmsr/system.hpp"

namespace oracle {

using Mask = std::uint32_t;

gmsr::BipartiteSystem n_model(double lambda1 = 0.4, double lambda2 = 0.6);
gmsr::BipartiteSystem single_pair(double lambda, double cap = 1.0, double half = 1.0);
gmsr::BipartiteSystem disjoint_pairs(double lambda1, double lambda2);
/// Four frontends around five backends: f1:{b1,b2,b3}, f2:{b2,b3}, f3:{b3,b4}, f4:{b4,b5,b1}.
gmsr::BipartiteSystem fig1_system(double lambda = 1.0);

/// Min s-t cut by trying every placement of the non-terminal nodes.
double min_cut_by_enumeration(const gmsr::FlowNetwork& net);

gmsr::FlowNetwork random_network(std::mt19937_64& rng, std::size_t max_nodes);

/// The three defining conditions of a stability decomposition, checked by
/// subset enumeration. Infinite capacities are mu_b(infinity) = cap.
bool decomposition_holds(const gmsr::BipartiteSystem& sys, Mask frontends, Mask backends, std::string* why = nullptr);

/// Every (frontend mask, backend mask) pair satisfying the conditions.
std::vector<std::pair<Mask, Mask>> all_decompositions(const gmsr::BipartiteSystem& sys);

/// Smallest subset slack min_P (sum_{N(P)} rate_b - lambda(P)) over nonempty P.
double subset_headroom(const gmsr::BipartiteSystem& sys, const std::vector<double>& rates);

/// N-model optimum from the equal-gradient condition and flow balance,
/// solved by bisection on N1 using the closed-form curves only.
struct NModelOptimum {
  double n1 = 0.0;
  double n2 = 0.0;
  double x21 = 0.0;
  double objective = 0.0;
};
NModelOptimum n_model_kkt(double lambda1 = 0.4, double lambda2 = 0.6);

/// Grid search over x21 in [0, 1] minimizing the N-model objective written
/// with closed-form inverses.
NModelOptimum n_model_grid(double step, double lambda1 = 0.4, double lambda2 = 0.6);

double bisect(const std::function<double(double)>& f, double lo, double hi, int iters = 200);

/// Random connected-enough system: every node has an edge; curves are random
/// hill or saturating-exponential.
gmsr::BipartiteSystem random_system(std::mt19937_64& rng, std::size_t max_frontends, std::size_t max_backends);

/// Random system scaled so that lambda sits at a load factor in [lo, hi] of
/// the largest routable multiple of itself.
gmsr::BipartiteSystem random_feasible_system(std::mt19937_64& rng, std::size_t max_frontends,
                                             std::size_t max_backends, double lo, double hi);

/// Euler reference for a single pair dN/dt = lambda - mu(N).
double single_pair_reference(double lambda, double cap, double half, double n0, double horizon, double h);

}  // namespace oracle
