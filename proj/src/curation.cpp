#include "curation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "errors.hpp"
#include "rng.hpp"
#include "worker_pool.hpp"

namespace tvlab {

namespace {

constexpr std::uint64_t kTagEval = 0x6576616cull;
constexpr std::uint64_t kTagRandom = 0x726e6421ull;

std::vector<int> ordered_by_score(const std::vector<double>& scores, bool ascending) {
  std::vector<int> ids(scores.size());
  std::iota(ids.begin(), ids.end(), 0);
  std::sort(ids.begin(), ids.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return ascending ? scores[a] < scores[b] : scores[a] > scores[b];
    return a < b;
  });
  return ids;
}

std::vector<int> random_subset(int n, int take, std::uint64_t seed) {
  std::vector<int> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  Rng rng(seed);
  for (int i = n - 1; i > 0; --i) std::swap(ids[i], ids[rng.uniform_int(i + 1)]);
  ids.resize(take);
  std::sort(ids.begin(), ids.end());
  return ids;
}

CurationRow evaluate_row(const Dataset& ds, CurationTask task, CurationMethod method,
                         const std::function<std::vector<int>(std::uint64_t)>& subset_for_seed,
                         const CharFnConfig& cfg, const AgentVariant& variant,
                         const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw ConfigError("curation: need at least one training seed");
  CurationRow row;
  row.task = task;
  row.method = method;
  row.n_seeds = static_cast<int>(seeds.size());

  Accumulator sum, sumsq;
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    std::vector<int> ids = subset_for_seed(seeds[k]);
    if (ids.empty()) throw ConfigError("curation: empty training subset");
    if (k == 0) row.subset_ids = ids;
    CharFnConfig run_cfg = cfg;
    run_cfg.base_seed = seeds[k];
    CharFnStats stats;
    double v = char_fn_at(ds, ids, run_cfg, variant, mix_seed({seeds[k], kTagEval}),
                          Fidelity::full, &stats);
    if (stats.capped) row.unstable = true;
    row.per_seed_returns.push_back(v);
    sum.add(v);
    sumsq.add(v * v);
  }
  const int n = row.n_seeds;
  row.final_return = sum.value() / n;
  if (n > 1) {
    double var = (sumsq.value() - n * row.final_return * row.final_return) / (n - 1);
    row.return_se = std::sqrt(std::max(var, 0.0) / n);
  }
  row.display_return =
      row.unstable ? std::max(row.final_return, kUnstableDisplayFloor) : row.final_return;
  return row;
}

}  // namespace

std::string to_string(CurationTask t) {
  return t == CurationTask::prune20 ? "prune20" : "subset30";
}

std::string to_string(CurationMethod m) {
  switch (m) {
    case CurationMethod::baseline: return "baseline";
    case CurationMethod::shapley_low: return "shapley_low";
    case CurationMethod::loo_low: return "loo_low";
    case CurationMethod::random: return "random";
    case CurationMethod::shapley_top: return "shapley_top";
    case CurationMethod::shapley_bottom: return "shapley_bottom";
    case CurationMethod::full: return "full";
  }
  return "baseline";
}

CurationRow prune_and_train(const Dataset& ds, const std::vector<double>& scores, double frac,
                            const CharFnConfig& cfg, const AgentVariant& variant,
                            const std::vector<std::uint64_t>& seeds) {
  if (frac < 0.0 || frac >= 1.0) throw ConfigError("prune_and_train: frac must be in [0, 1)");
  if (static_cast<int>(scores.size()) != ds.size())
    throw ConfigError("prune_and_train: scores must cover all ids");
  const int n = ds.size();
  const int remove = static_cast<int>(std::floor(frac * n));
  if (remove >= n) throw ConfigError("prune_and_train: empty remainder");
  std::vector<int> asc = ordered_by_score(scores, /*ascending=*/true);
  std::vector<int> keep(asc.begin() + remove, asc.end());
  std::sort(keep.begin(), keep.end());
  return evaluate_row(ds, CurationTask::prune20, CurationMethod::baseline,
                      [keep](std::uint64_t) { return keep; }, cfg, variant, seeds);
}

CurationRow subset_and_train(const Dataset& ds, CurationMethod selector,
                             const std::vector<double>& shapley, double frac,
                             const CharFnConfig& cfg, const AgentVariant& variant,
                             const std::vector<std::uint64_t>& seeds) {
  if (frac <= 0.0 || frac > 1.0) throw ConfigError("subset_and_train: frac must be in (0, 1]");
  const int n = ds.size();
  const int take = std::max(1, static_cast<int>(std::floor(frac * n)));
  std::function<std::vector<int>(std::uint64_t)> pick;
  switch (selector) {
    case CurationMethod::full: {
      std::vector<int> all(n);
      std::iota(all.begin(), all.end(), 0);
      pick = [all](std::uint64_t) { return all; };
      break;
    }
    case CurationMethod::shapley_top: {
      std::vector<int> ids = ordered_by_score(shapley, /*ascending=*/false);
      ids.resize(take);
      std::sort(ids.begin(), ids.end());
      pick = [ids](std::uint64_t) { return ids; };
      break;
    }
    case CurationMethod::shapley_bottom: {
      std::vector<int> ids = ordered_by_score(shapley, /*ascending=*/true);
      ids.resize(take);
      std::sort(ids.begin(), ids.end());
      pick = [ids](std::uint64_t) { return ids; };
      break;
    }
    case CurationMethod::random:
      pick = [n, take](std::uint64_t seed) {
        return random_subset(n, take, mix_seed({seed, kTagRandom}));
      };
      break;
    default:
      throw ConfigError("subset_and_train: selector must be full/top/bottom/random");
  }
  return evaluate_row(ds, CurationTask::subset30, selector, pick, cfg, variant, seeds);
}

std::vector<CurationRow> run_curation(const Dataset& ds, const ValuationReport& valuation,
                                      const CharFnConfig& cfg, const AgentVariant& variant,
                                      const CurationConfig& cur, std::uint64_t seed, int workers) {
  if (static_cast<int>(valuation.per_trajectory.size()) != ds.size())
    throw ConfigError("run_curation: valuation does not match the dataset");
  std::vector<double> shapley(ds.size()), loo(ds.size());
  for (const TrajectoryValue& tv : valuation.per_trajectory) {
    shapley.at(tv.id) = tv.shapley;
    loo.at(tv.id) = tv.loo;
  }
  // one shared seed list so the prune baseline and the subset full row
  // are bit-identical
  std::vector<std::uint64_t> seeds;
  for (int k = 0; k < cur.n_seeds; ++k)
    seeds.push_back(mix_seed({seed, static_cast<std::uint64_t>(k)}));

  const int n = ds.size();
  std::vector<std::function<CurationRow()>> jobs;
  jobs.push_back([&] {
    CurationRow row = prune_and_train(ds, shapley, 0.0, cfg, variant, seeds);
    row.method = CurationMethod::baseline;
    return row;
  });
  jobs.push_back([&] {
    CurationRow row = prune_and_train(ds, shapley, cur.prune_fraction, cfg, variant, seeds);
    row.method = CurationMethod::shapley_low;
    return row;
  });
  jobs.push_back([&] {
    CurationRow row = prune_and_train(ds, loo, cur.prune_fraction, cfg, variant, seeds);
    row.method = CurationMethod::loo_low;
    return row;
  });
  jobs.push_back([&] {
    // random pruning control: keep a random (1 - frac) share, redrawn per seed
    const int keep_count = n - static_cast<int>(std::floor(cur.prune_fraction * n));
    CurationRow row = evaluate_row(
        ds, CurationTask::prune20, CurationMethod::random,
        [n, keep_count](std::uint64_t s) {
          return random_subset(n, keep_count, mix_seed({s, kTagRandom}));
        },
        cfg, variant, seeds);
    return row;
  });
  jobs.push_back([&] {
    return subset_and_train(ds, CurationMethod::full, shapley, 1.0, cfg, variant, seeds);
  });
  jobs.push_back([&] {
    return subset_and_train(ds, CurationMethod::random, shapley, cur.subset_fraction, cfg,
                            variant, seeds);
  });
  jobs.push_back([&] {
    return subset_and_train(ds, CurationMethod::shapley_top, shapley, cur.subset_fraction, cfg,
                            variant, seeds);
  });
  jobs.push_back([&] {
    return subset_and_train(ds, CurationMethod::shapley_bottom, shapley, cur.subset_fraction,
                            cfg, variant, seeds);
  });

  std::vector<CurationRow> rows(jobs.size());
  parallel_for(jobs.size(), workers, [&](std::size_t i) { rows[i] = jobs[i](); });
  return rows;
}

}  // namespace tvlab
