#include "mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "errors.hpp"
#include "rng.hpp"

namespace tvlab {

namespace {

std::vector<double> midranks(std::span<const double> x) {
  const int n = static_cast<int>(x.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return x[a] < x[b]; });
  std::vector<double> ranks(n);
  int i = 0;
  while (i < n) {
    int j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    double rank = 0.5 * (i + j) + 1.0;  // average of 1-based ranks i+1..j+1
    for (int k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  const int n = static_cast<int>(x.size());
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (int i = 0; i < n; ++i) {
    double dx = x[i] - mx;
    double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0)
    throw NumericError("spearman: zero rank variance (all-tied input)");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
  const int n = static_cast<int>(sorted.size());
  if (n == 1) return sorted[0];
  double h = p * (n - 1);
  int lo = static_cast<int>(std::floor(h));
  int hi = std::min(lo + 1, n - 1);
  double frac = h - lo;
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ConfigError("spearman: length mismatch");
  if (x.size() < 3) throw ConfigError("spearman: need at least 3 pairs");
  std::vector<double> rx = midranks(x);
  std::vector<double> ry = midranks(y);
  return pearson(rx, ry);
}

double conditioned_spearman(std::span<const double> x, std::span<const double> y,
                            std::span<const int> bins) {
  if (x.size() != y.size() || x.size() != bins.size())
    throw ConfigError("conditioned_spearman: length mismatch");
  int max_bin = -1;
  for (int b : bins) max_bin = std::max(max_bin, b);
  double weighted = 0.0;
  long total = 0;
  for (int b = 0; b <= max_bin; ++b) {
    std::vector<double> bx, by;
    for (std::size_t i = 0; i < bins.size(); ++i) {
      if (bins[i] == b) {
        bx.push_back(x[i]);
        by.push_back(y[i]);
      }
    }
    if (bx.size() < 3) continue;
    double r;
    try {
      r = spearman(bx, by);
    } catch (const NumericError&) {
      continue;  // fully tied bin
    }
    weighted += r * static_cast<double>(bx.size());
    total += static_cast<long>(bx.size());
  }
  if (total == 0) throw NumericError("conditioned_spearman: all bins too small");
  return weighted / static_cast<double>(total);
}

CiEstimate bootstrap_ci(int n_items,
                        const std::function<double(std::span<const int>)>& statistic,
                        int n_boot, std::uint64_t seed) {
  if (n_boot < 100) throw ConfigError("bootstrap_ci: n_boot must be >= 100");
  if (n_items < 1) throw ConfigError("bootstrap_ci: empty input");
  CiEstimate out;
  std::vector<int> identity(n_items);
  std::iota(identity.begin(), identity.end(), 0);
  out.point = statistic(identity);

  std::vector<double> stats;
  stats.reserve(n_boot);
  std::vector<int> resample(n_items);
  for (int r = 0; r < n_boot; ++r) {
    Rng rng(mix_seed({seed, static_cast<std::uint64_t>(r)}));
    for (int i = 0; i < n_items; ++i) resample[i] = rng.uniform_int(n_items);
    try {
      stats.push_back(statistic(resample));
    } catch (const NumericError&) {
      ++out.n_skipped;
    }
  }
  if (stats.empty()) throw NumericError("bootstrap_ci: every resample was degenerate");
  std::sort(stats.begin(), stats.end());
  out.ci_lo = quantile_sorted(stats, 0.025);
  out.ci_hi = quantile_sorted(stats, 0.975);
  return out;
}

std::string to_string(Conditioning c) {
  return c == Conditioning::pooled ? "pooled" : "within_decile_mean";
}

Conditioning conditioning_from_string(const std::string& name) {
  if (name == "pooled") return Conditioning::pooled;
  if (name == "within_decile_mean") return Conditioning::within_decile_mean;
  throw ConfigError("unknown conditioning mode: " + name);
}

namespace {

// gather helper for bootstrap resampling
template <typename T>
std::vector<T> take(const std::vector<T>& v, std::span<const int> idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(v.at(i));
  return out;
}

CorrelationEstimate correlate(const std::vector<double>& a, const std::vector<double>& b,
                              const std::vector<int>& bins, int n_boot, std::uint64_t seed) {
  CorrelationEstimate est;
  est.pooled = bootstrap_ci(
      static_cast<int>(a.size()),
      [&](std::span<const int> idx) {
        return spearman(take(a, idx), take(b, idx));
      },
      n_boot, mix_seed({seed, fnv1a64("pooled")}));
  est.conditioned = bootstrap_ci(
      static_cast<int>(a.size()),
      [&](std::span<const int> idx) {
        return conditioned_spearman(take(a, idx), take(b, idx), take(bins, idx));
      },
      n_boot, mix_seed({seed, fnv1a64("conditioned")}));
  return est;
}

}  // namespace

MechanismReport mechanism_report(const std::map<std::string, MechanismInputs>& inputs,
                                 int n_boot, std::uint64_t seed, Conditioning conditioning) {
  if (inputs.empty()) throw ConfigError("mechanism_report: no variants");
  MechanismReport report;
  report.n_boot = n_boot;
  report.conditioning = conditioning;
  std::size_t n = inputs.begin()->second.pe.size();
  for (const auto& [name, in] : inputs) {
    if (in.pe.size() != n || in.grad_var.size() != n || in.shapley.size() != n ||
        in.bins.size() != n)
      throw ConfigError("mechanism_report: mismatched ids across inputs");
    VariantMechanism vm;
    vm.variant = name;
    std::uint64_t vseed = mix_seed({seed, fnv1a64(name)});
    vm.pe_var = correlate(in.pe, in.grad_var, in.bins, n_boot, mix_seed({vseed, fnv1a64("pe_var")}));
    vm.var_phi =
        correlate(in.grad_var, in.shapley, in.bins, n_boot, mix_seed({vseed, fnv1a64("var_phi")}));
    vm.pe_phi = correlate(in.pe, in.shapley, in.bins, n_boot, mix_seed({vseed, fnv1a64("pe_phi")}));
    report.variants.push_back(std::move(vm));
  }

  auto vanilla = inputs.find("vanilla");
  auto whitened = inputs.find("whitened");
  if (vanilla != inputs.end() && whitened != inputs.end()) {
    const MechanismInputs& v = vanilla->second;
    const MechanismInputs& w = whitened->second;
    auto flip_stat = [&](std::span<const int> idx) {
      bool cond = conditioning == Conditioning::within_decile_mean;
      double rw = cond ? conditioned_spearman(take(w.pe, idx), take(w.shapley, idx), take(w.bins, idx))
                       : spearman(take(w.pe, idx), take(w.shapley, idx));
      double rv = cond ? conditioned_spearman(take(v.pe, idx), take(v.shapley, idx), take(v.bins, idx))
                       : spearman(take(v.pe, idx), take(v.shapley, idx));
      return rw - rv;
    };
    report.flip_pe_phi =
        bootstrap_ci(static_cast<int>(n), flip_stat, n_boot, mix_seed({seed, fnv1a64("flip")}));
  }
  return report;
}

}  // namespace tvlab
