#include "saddle.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"
#include "rng.hpp"
#include "worker_pool.hpp"

namespace tvlab {

std::string to_string(DriftKind k) {
  switch (k) {
    case DriftKind::zero: return "zero";
    case DriftKind::saddle_quadratic: return "saddle_quadratic";
    case DriftKind::double_well: return "double_well";
  }
  return "zero";
}

DriftKind drift_kind_from_string(const std::string& name) {
  if (name == "zero") return DriftKind::zero;
  if (name == "saddle_quadratic") return DriftKind::saddle_quadratic;
  if (name == "double_well") return DriftKind::double_well;
  throw ConfigError("unknown drift kind: " + name);
}

double SaddleDrift::f(double s) const {
  switch (kind) {
    case DriftKind::zero:
      return 0.0;
    case DriftKind::saddle_quadratic: {
      double d = s - s_star;
      return -0.5 * beta * d * d;
    }
    case DriftKind::double_well: {
      double v = (s - center) / width;
      double w = 1.0 - v * v;
      return h * w * w;
    }
  }
  return 0.0;
}

double SaddleDrift::fprime(double s) const {
  switch (kind) {
    case DriftKind::zero:
      return 0.0;
    case DriftKind::saddle_quadratic:
      return -beta * (s - s_star);
    case DriftKind::double_well: {
      double v = (s - center) / width;
      return -4.0 * h * v * (1.0 - v * v) / width;
    }
  }
  return 0.0;
}

void SaddleProblem::validate() const {
  if (!(L > 0.0)) throw ConfigError("saddle: L must be > 0");
  if (!(s0 > 0.0 && s0 < L)) throw ConfigError("saddle: s0 must lie in (0, L)");
  if (!(eta > 0.0)) throw ConfigError("saddle: eta must be > 0");
  if (!(sigma2 > 0.0)) throw ConfigError("saddle: sigma2 must be > 0");
}

bool SaddleProblem::eta_warning() const { return eta > 0.01 * L * L / sigma2; }

EscapeEstimate simulate_exit(const SaddleProblem& prob, long n_paths, std::uint64_t seed,
                             long step_cap, int workers) {
  prob.validate();
  if (n_paths < 100) throw ConfigError("simulate_exit: n_paths must be >= 100");

  const double sqrt_eta = std::sqrt(prob.eta);
  const double sigma = std::sqrt(prob.sigma2);

  // 0 = exited left, 1 = exited right, 2 = capped
  std::vector<unsigned char> outcome(n_paths, 2);
  parallel_for(static_cast<std::size_t>(n_paths), workers, [&](std::size_t path) {
    Rng rng(mix_seed({seed, static_cast<std::uint64_t>(path)}));
    double s = prob.s0;
    for (long t = 0; t < step_cap; ++t) {
      s += -prob.eta * prob.drift.fprime(s) + sqrt_eta * sigma * rng.normal();
      if (s < 0.0) {
        outcome[path] = 0;
        return;
      }
      if (s > prob.L) {
        outcome[path] = 1;
        return;
      }
    }
  });

  long right = 0, capped = 0;
  for (unsigned char o : outcome) {
    if (o == 1) ++right;
    if (o == 2) ++capped;
  }
  if (capped * 2 > n_paths)
    throw NumericError("simulate_exit: over half the paths hit the step cap (eta/sigma2 misconfigured)");

  EscapeEstimate est;
  est.n_paths = n_paths;
  est.n_capped = capped;
  est.warning = capped * 100 > n_paths;
  long effective = n_paths - capped;
  est.p_hat = static_cast<double>(right) / effective;
  est.se = std::sqrt(std::max(est.p_hat * (1.0 - est.p_hat), 0.0) / effective);
  est.p_bvp = bvp_exit_probability(prob);
  return est;
}

namespace {

struct ShiftedIntegrand {
  const SaddleDrift* drift;
  double inv_half_sigma2;  // 2 / sigma^2
  double f_max;
  double operator()(double t) const {
    return std::exp((drift->f(t) - f_max) * inv_half_sigma2);
  }
};

double adaptive_simpson(const ShiftedIntegrand& g, double a, double b, double fa, double fm,
                        double fb, double whole, double tol, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m);
  double rm = 0.5 * (m + b);
  double flm = g(lm);
  double frm = g(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_simpson(g, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(g, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const ShiftedIntegrand& g, double a, double b, double tol) {
  if (b <= a) return 0.0;
  // split at a modest grid first so narrow features are not skipped
  const int pieces = 16;
  double total = 0.0;
  for (int i = 0; i < pieces; ++i) {
    double lo = a + (b - a) * i / pieces;
    double hi = a + (b - a) * (i + 1) / pieces;
    double m = 0.5 * (lo + hi);
    double flo = g(lo), fm = g(m), fhi = g(hi);
    double whole = (hi - lo) / 6.0 * (flo + 4.0 * fm + fhi);
    total += adaptive_simpson(g, lo, hi, flo, fm, fhi, whole, tol / pieces, 40);
  }
  return total;
}

}  // namespace

double bvp_exit_probability(const SaddleProblem& prob) {
  prob.validate();
  // shift the exponent by max f on [0, L] (scan plus the analytic critical
  // points) so the integrand never overflows
  double f_max = std::max(prob.drift.f(0.0), prob.drift.f(prob.L));
  const int scan = 4096;
  for (int i = 1; i < scan; ++i) {
    double t = prob.L * i / scan;
    f_max = std::max(f_max, prob.drift.f(t));
  }
  ShiftedIntegrand g{&prob.drift, 2.0 / prob.sigma2, f_max};
  const double tol = 1e-10;
  double denom = integrate(g, 0.0, prob.L, tol);
  if (!(denom > 0.0)) throw NumericError("bvp_exit_probability: degenerate integral");
  double num = integrate(g, 0.0, prob.s0, tol);
  return std::clamp(num / denom, 0.0, 1.0);
}

SweepResult monotonicity_sweep(const SaddleProblem& base, const std::vector<double>& sigma2_grid,
                               long n_paths, std::uint64_t seed, int workers) {
  if (sigma2_grid.size() < 3) throw ConfigError("monotonicity_sweep: need at least 3 grid points");
  if (!std::is_sorted(sigma2_grid.begin(), sigma2_grid.end()))
    throw ConfigError("monotonicity_sweep: grid must be sorted ascending");

  SweepResult result;
  result.bvp_strictly_increasing = true;
  result.mc_consistent = true;
  for (std::size_t i = 0; i < sigma2_grid.size(); ++i) {
    SaddleProblem prob = base;
    prob.sigma2 = sigma2_grid[i];
    EscapeEstimate est =
        simulate_exit(prob, n_paths, mix_seed({seed, static_cast<std::uint64_t>(i)}),
                      kDefaultStepCap, workers);
    SweepRow row;
    row.sigma2 = prob.sigma2;
    row.p_hat = est.p_hat;
    row.se = est.se;
    row.p_bvp = est.p_bvp;
    if (i > 0) {
      const SweepRow& prev = result.rows.back();
      double d_bvp = row.p_bvp - prev.p_bvp;
      row.d_p_bvp_sign = d_bvp > 0.0 ? 1 : (d_bvp < 0.0 ? -1 : 0);
      if (d_bvp <= 0.0) result.bvp_strictly_increasing = false;
      double combined_se = std::sqrt(row.se * row.se + prev.se * prev.se);
      if (row.p_hat - prev.p_hat < -2.0 * combined_se) result.mc_consistent = false;
    }
    result.rows.push_back(row);
  }
  return result;
}

}  // namespace tvlab
