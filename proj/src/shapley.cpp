#include "shapley.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <mutex>
#include <numeric>
#include <unordered_map>

#include "errors.hpp"
#include "rng.hpp"
#include "worker_pool.hpp"

namespace tvlab {

namespace {

constexpr std::uint64_t kTagPerm = 0x7065726dull;
constexpr std::uint64_t kTagFid = 0x66696464ull;

std::uint64_t fold_sorted_keys(std::vector<std::uint64_t> keys) {
  std::sort(keys.begin(), keys.end());
  std::uint64_t h = 0x636f616cull;
  for (std::uint64_t k : keys) h = splitmix64(h ^ k);
  return h;
}

struct MemoKey {
  std::uint64_t coalition;
  int fidelity;
  bool operator==(const MemoKey& o) const {
    return coalition == o.coalition && fidelity == o.fidelity;
  }
};

struct MemoKeyHash {
  std::size_t operator()(const MemoKey& k) const {
    return static_cast<std::size_t>(splitmix64(k.coalition ^ (static_cast<std::uint64_t>(k.fidelity) << 62)));
  }
};

// Memoized evaluation keyed by coalition content.  Values are
// deterministic, so a duplicated computation under contention is benign.
class MemoizedValue {
 public:
  MemoizedValue(const CoalitionValueFn& fn, std::span<const std::uint64_t> content_keys)
      : fn_(fn), content_keys_(content_keys.begin(), content_keys.end()) {}

  double eval(std::span<const int> ids, Fidelity fid) {
    std::vector<std::uint64_t> keys;
    keys.reserve(ids.size());
    for (int id : ids) keys.push_back(content_keys_.at(id));
    MemoKey key{fold_sorted_keys(std::move(keys)), static_cast<int>(fid)};
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto it = memo_.find(key);
      if (it != memo_.end()) return it->second;
    }
    double v = fn_(ids, fid);
    std::lock_guard<std::mutex> lock(mutex_);
    auto [it, inserted] = memo_.emplace(key, v);
    if (inserted) ++n_evaluations_;
    return it->second;
  }

  long n_evaluations() const { return n_evaluations_; }

 private:
  const CoalitionValueFn& fn_;
  std::vector<std::uint64_t> content_keys_;
  std::unordered_map<MemoKey, double, MemoKeyHash> memo_;
  std::mutex mutex_;
  long n_evaluations_ = 0;
};

std::vector<int> sampled_permutation(int n, std::uint64_t seed) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.uniform_int(i + 1)]);
  return perm;
}

}  // namespace

ValuationReport shapley_mc(int n_players, const CoalitionValueFn& value, const McOptions& opt) {
  if (n_players < 1) throw ConfigError("shapley_mc: empty dataset");
  if (!opt.exhaustive && opt.permutations < 1)
    throw ConfigError("shapley_mc: need at least one permutation");

  std::vector<std::uint64_t> content = opt.content_keys;
  if (content.empty()) {
    content.resize(n_players);
    for (int i = 0; i < n_players; ++i) content[i] = static_cast<std::uint64_t>(i);
  }
  if (static_cast<int>(content.size()) != n_players)
    throw ConfigError("shapley_mc: content key count must match player count");

  // enumerate permutations up front so workers can run them independently
  std::vector<std::vector<int>> perms;
  if (opt.exhaustive) {
    if (n_players > 8) throw ConfigError("shapley_mc: exhaustive mode limited to N <= 8");
    std::vector<int> perm(n_players);
    std::iota(perm.begin(), perm.end(), 0);
    do {
      perms.push_back(perm);
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    perms.reserve(opt.permutations);
    for (int p = 0; p < opt.permutations; ++p) {
      if (opt.antithetic && p % 2 == 1) {
        std::vector<int> rev(perms[p - 1].rbegin(), perms[p - 1].rend());
        perms.push_back(std::move(rev));
      } else {
        perms.push_back(sampled_permutation(
            n_players, mix_seed({opt.seed, kTagPerm, static_cast<std::uint64_t>(p)})));
      }
    }
  }
  const int n_perms = static_cast<int>(perms.size());

  MemoizedValue memo(value, content);
  std::vector<std::vector<double>> marginals(n_perms, std::vector<double>(n_players, 0.0));
  std::vector<double> totals(n_perms, 0.0);

  parallel_for(n_perms, std::max(opt.workers, 1), [&](std::size_t p) {
    const std::vector<int>& perm = perms[p];
    std::vector<int> prefix;
    prefix.reserve(n_players);
    double total = 0.0;
    for (int j = 0; j < n_players; ++j) {
      Fidelity fid = Fidelity::full;
      if (opt.proxy_fraction > 0.0) {
        Rng coin(mix_seed({opt.seed, kTagFid, static_cast<std::uint64_t>(p),
                           static_cast<std::uint64_t>(j)}));
        if (coin.uniform() < opt.proxy_fraction) fid = Fidelity::proxy;
      }
      double before = memo.eval(prefix, fid);
      prefix.push_back(perm[j]);
      double after = memo.eval(prefix, fid);
      marginals[p][perm[j]] = after - before;
      total += after - before;
    }
    totals[p] = total;
  });

  ValuationReport report;
  report.n_permutations = n_perms;
  report.per_trajectory.resize(n_players);
  for (int i = 0; i < n_players; ++i) {
    Accumulator sum;
    for (int p = 0; p < n_perms; ++p) sum.add(marginals[p][i]);
    double mean = sum.value() / n_perms;
    Accumulator sq;
    for (int p = 0; p < n_perms; ++p) {
      double d = marginals[p][i] - mean;
      sq.add(d * d);
    }
    TrajectoryValue& tv = report.per_trajectory[i];
    tv.id = i;
    tv.shapley = mean;
    tv.n_marginals = n_perms;
    tv.shapley_se = n_perms > 1 ? std::sqrt(sq.value() / (n_perms - 1) / n_perms) : 0.0;
  }

  {
    Accumulator sum;
    for (double t : totals) sum.add(t);
    double mean = sum.value() / n_perms;
    Accumulator sq;
    for (double t : totals) {
      double d = t - mean;
      sq.add(d * d);
    }
    report.efficiency_se = n_perms > 1 ? std::sqrt(sq.value() / (n_perms - 1) / n_perms) : 0.0;
  }

  std::vector<int> grand(n_players);
  std::iota(grand.begin(), grand.end(), 0);
  report.v_grand = memo.eval(grand, Fidelity::full);
  report.v_empty = memo.eval({}, Fidelity::full);
  double v_grand_proxy =
      opt.proxy_fraction > 0.0 ? memo.eval(grand, Fidelity::proxy) : report.v_grand;
  report.efficiency_target = opt.proxy_fraction * v_grand_proxy +
                             (1.0 - opt.proxy_fraction) * report.v_grand - report.v_empty;
  report.truncation.n_evaluations = memo.n_evaluations();
  return report;
}

ValuationReport shapley_exact(int n_players, const CoalitionValueFn& value) {
  if (n_players < 1) throw ConfigError("shapley_exact: empty dataset");
  if (n_players > 12)
    throw ConfigError("shapley_exact: refusing N > 12 (cost 2^N * N)");

  const std::uint32_t n_masks = 1u << n_players;
  std::vector<double> v(n_masks);
  std::vector<int> ids;
  for (std::uint32_t mask = 0; mask < n_masks; ++mask) {
    ids.clear();
    for (int i = 0; i < n_players; ++i)
      if (mask & (1u << i)) ids.push_back(i);
    v[mask] = value(ids, Fidelity::full);
  }

  // binomial coefficients C(N-1, s)
  std::vector<double> binom(n_players, 1.0);
  for (int s = 1; s < n_players; ++s)
    binom[s] = binom[s - 1] * (n_players - s) / s;

  ValuationReport report;
  report.per_trajectory.resize(n_players);
  for (int i = 0; i < n_players; ++i) {
    // average marginals per coalition-size stratum, then average strata:
    // matches the permutation expectation exactly
    std::vector<Accumulator> strata(n_players);
    std::uint32_t bit = 1u << i;
    for (std::uint32_t mask = 0; mask < n_masks; ++mask) {
      if (mask & bit) continue;
      int s = std::popcount(mask);
      strata[s].add(v[mask | bit] - v[mask]);
    }
    Accumulator phi;
    for (int s = 0; s < n_players; ++s) phi.add(strata[s].value() / binom[s]);
    TrajectoryValue& tv = report.per_trajectory[i];
    tv.id = i;
    tv.shapley = phi.value() / n_players;
    tv.shapley_se = 0.0;
    tv.n_marginals = static_cast<int>(n_masks >> 1);
  }
  report.v_grand = v[n_masks - 1];
  report.v_empty = v[0];
  report.n_permutations = 0;
  report.efficiency_target = report.v_grand - report.v_empty;
  report.truncation.n_evaluations = n_masks;
  return report;
}

std::vector<double> loo_scores(int n_players, const CoalitionValueFn& value) {
  if (n_players < 2) throw ConfigError("loo: need at least 2 trajectories");
  std::vector<int> grand(n_players);
  std::iota(grand.begin(), grand.end(), 0);
  double v_full = value(grand, Fidelity::full);
  std::vector<double> out(n_players);
  std::vector<int> rest;
  rest.reserve(n_players - 1);
  for (int i = 0; i < n_players; ++i) {
    rest.clear();
    for (int j = 0; j < n_players; ++j)
      if (j != i) rest.push_back(j);
    out[i] = v_full - value(rest, Fidelity::full);
  }
  return out;
}

}  // namespace tvlab
