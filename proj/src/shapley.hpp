#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "policy_gradient.hpp"

namespace tvlab {

struct TruncationStats {
  long n_evaluations = 0;
  long n_capped_evaluations = 0;
  long n_capped_rollouts = 0;
};

struct TrajectoryValue {
  int id = 0;
  double shapley = 0.0;
  double shapley_se = 0.0;
  double loo = 0.0;
  int n_marginals = 0;
};

struct ValuationReport {
  std::vector<TrajectoryValue> per_trajectory;
  double v_grand = 0.0;  // full-fidelity value of the grand coalition
  double v_empty = 0.0;
  int n_permutations = 0;
  TruncationStats truncation;
  // Telescoping target under the proxy mix:
  //   pf * v_proxy(D) + (1 - pf) * v_full(D) - v(empty),
  // with the SE of per-permutation marginal totals.
  double efficiency_target = 0.0;
  double efficiency_se = 0.0;
};

// Coalition-value functions are first-class so axiom tests can swap in
// stubs; members are player indices 0..N-1.
using CoalitionValueFn = std::function<double(std::span<const int>, Fidelity)>;

struct McOptions {
  int permutations = 100;
  std::uint64_t seed = 0;
  double proxy_fraction = 0.0;
  bool antithetic = false;       // pair each permutation with its reverse
  bool exhaustive = false;       // walk all N! permutations (N <= 8)
  int workers = 1;
  // Content keys make interchangeable players share memo entries and
  // fidelity draws; defaults to the player index.
  std::vector<std::uint64_t> content_keys;
};

// Permutation Monte Carlo (Shapley).  Each permutation walks prefixes,
// crediting v(Pred u {i}) - v(Pred) to i; the fidelity of each marginal is
// drawn once per (permutation, position) and shared by its two
// evaluations.  Evaluations are memoized by (coalition content, fidelity).
ValuationReport shapley_mc(int n_players, const CoalitionValueFn& value, const McOptions& opt);

// Exact Shapley from the weighted-subset formula, full fidelity, N <= 12.
ValuationReport shapley_exact(int n_players, const CoalitionValueFn& value);

// LOO_i = v(D) - v(D \ {i}); all evaluations at full fidelity.
std::vector<double> loo_scores(int n_players, const CoalitionValueFn& value);

}  // namespace tvlab
