#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "shapley.hpp"

namespace tvlab {

enum class CurationTask { prune20, subset30 };
enum class CurationMethod { baseline, shapley_low, loo_low, random, shapley_top, shapley_bottom, full };

std::string to_string(CurationTask t);
std::string to_string(CurationMethod m);

// Displayed returns for unstable rows are floored at -200000, Table-2
// style; final_return keeps the raw capped mean.
inline constexpr double kUnstableDisplayFloor = -200000.0;

struct CurationRow {
  CurationTask task = CurationTask::prune20;
  CurationMethod method = CurationMethod::baseline;
  double final_return = 0.0;    // mean over training seeds (raw)
  double display_return = 0.0;  // floored when unstable
  bool unstable = false;        // any seed hit the divergence cap
  int n_seeds = 0;
  double return_se = 0.0;
  std::vector<double> per_seed_returns;
  std::vector<int> subset_ids;  // ids trained on (seed 0's draw for random rows)
};

struct CurationConfig {
  double prune_fraction = 0.2;
  double subset_fraction = 0.3;
  int n_seeds = 5;
};

// Removes floor(frac N) lowest-scored trajectories (ties by id) and trains
// on the remainder with full-fidelity evaluations, one per training seed.
CurationRow prune_and_train(const Dataset& ds, const std::vector<double>& scores, double frac,
                            const CharFnConfig& cfg, const AgentVariant& variant,
                            const std::vector<std::uint64_t>& seeds);

// Trains on the selected floor(frac N) subset; `random` redraws per seed.
CurationRow subset_and_train(const Dataset& ds, CurationMethod selector,
                             const std::vector<double>& shapley, double frac,
                             const CharFnConfig& cfg, const AgentVariant& variant,
                             const std::vector<std::uint64_t>& seeds);

// The full Table-2 grid: prune {baseline, shapley_low, loo_low, random}
// and subset {full, random, shapley_top, shapley_bottom}.
std::vector<CurationRow> run_curation(const Dataset& ds, const ValuationReport& valuation,
                                      const CharFnConfig& cfg, const AgentVariant& variant,
                                      const CurationConfig& cur, std::uint64_t seed, int workers);

}  // namespace tvlab
