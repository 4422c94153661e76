#include "saddle.hpp"

#include <cmath>

#include "errors.hpp"
#include "shapley.hpp"
#include "test_util.hpp"

using namespace tvlab;

namespace {

SaddleProblem saddle_problem(double sigma2, double s0 = 0.4, double beta = 4.0) {
  SaddleProblem p;
  p.drift.kind = DriftKind::saddle_quadratic;
  p.drift.beta = beta;
  p.drift.s_star = 0.5;
  p.L = 1.0;
  p.s0 = s0;
  p.eta = 1e-3;
  p.sigma2 = sigma2;
  return p;
}

void test_zero_drift_bvp() {
  for (double s0 : {0.1, 0.25, 0.5, 0.9}) {
    SaddleProblem p;
    p.drift.kind = DriftKind::zero;
    p.s0 = s0;
    p.sigma2 = 0.2;
    REQUIRE_CLOSE(bvp_exit_probability(p), s0, 1e-10);
  }
  test_pass("driftless exit probability is s0/L exactly");
}

void test_zero_drift_mc() {
  SaddleProblem p;
  p.drift.kind = DriftKind::zero;
  p.s0 = 0.3;
  p.sigma2 = 0.2;
  p.eta = 1e-3;
  EscapeEstimate est = simulate_exit(p, 3000, 7);
  REQUIRE_MSG(std::abs(est.p_hat - 0.3) <= 3.0 * est.se + 0.02,
              "p_hat %.4f se %.4f", est.p_hat, est.se);
  REQUIRE(est.n_capped == 0);
  test_pass("driftless MC within tolerance of s0/L");
}

void test_symmetric_midpoint() {
  SaddleProblem p = saddle_problem(0.15, 0.5);
  REQUIRE_CLOSE(bvp_exit_probability(p), 0.5, 1e-9);
  SaddleProblem dw;
  dw.drift.kind = DriftKind::double_well;
  dw.drift.h = 0.5;
  dw.drift.width = 0.25;
  dw.drift.center = 0.5;
  dw.s0 = 0.5;
  dw.sigma2 = 0.1;
  REQUIRE_CLOSE(bvp_exit_probability(dw), 0.5, 1e-9);
  test_pass("symmetric drift about L/2 gives p = 1/2");
}

void test_erf_closed_form() {
  // f = -(beta/2)(t - s*)^2: integrand exp(-beta (t-s*)^2 / sigma^2);
  // integrals reduce to error functions
  for (double sigma2 : {0.05, 0.2, 0.8}) {
    for (double s0 : {0.2, 0.4, 0.7}) {
      SaddleProblem p = saddle_problem(sigma2, s0, 3.0);
      double a = std::sqrt(p.drift.beta / p.sigma2);
      auto anti = [&](double t) { return std::erf(a * (t - p.drift.s_star)); };
      double expected = (anti(s0) - anti(0.0)) / (anti(p.L) - anti(0.0));
      REQUIRE_CLOSE(bvp_exit_probability(p), expected, 1e-6);
    }
  }
  test_pass("quadrature matches the error-function closed form");
}

void test_boundary_limits() {
  SaddleProblem near0 = saddle_problem(0.2, 1e-4);
  REQUIRE(bvp_exit_probability(near0) < 1e-3);
  SaddleProblem near1 = saddle_problem(0.2, 1.0 - 1e-4);
  REQUIRE(bvp_exit_probability(near1) > 1.0 - 1e-3);

  SaddleProblem mc0 = saddle_problem(0.2, 0.02);
  EscapeEstimate est0 = simulate_exit(mc0, 500, 3);
  REQUIRE(est0.p_hat < 0.1);
  SaddleProblem mc1 = saddle_problem(0.2, 0.98);
  EscapeEstimate est1 = simulate_exit(mc1, 500, 3);
  REQUIRE(est1.p_hat > 0.9);
  test_pass("boundary limits: p -> 0 and p -> 1");
}

void test_monotonicity_sweep() {
  SaddleProblem base = saddle_problem(0.1);
  std::vector<double> grid{0.1, 0.2, 0.4};
  SweepResult sweep = monotonicity_sweep(base, grid, 4000, 11, 2);
  REQUIRE(sweep.bvp_strictly_increasing);
  REQUIRE(sweep.mc_consistent);
  // pairwise MC gaps exceed twice the combined standard error
  for (std::size_t i = 1; i < sweep.rows.size(); ++i) {
    double gap = sweep.rows[i].p_hat - sweep.rows[i - 1].p_hat;
    double combined =
        std::sqrt(sweep.rows[i].se * sweep.rows[i].se + sweep.rows[i - 1].se * sweep.rows[i - 1].se);
    REQUIRE_MSG(gap > 2.0 * combined, "gap %.4f combined se %.4f", gap, combined);
  }
  test_pass("saddle drift: escape probability strictly increases in sigma^2");
}

void test_zero_drift_sweep_constant() {
  SaddleProblem base;
  base.drift.kind = DriftKind::zero;
  base.s0 = 0.4;
  std::vector<double> grid{0.1, 0.2, 0.4};
  SweepResult sweep = monotonicity_sweep(base, grid, 500, 13);
  for (const SweepRow& row : sweep.rows) REQUIRE_CLOSE(row.p_bvp, 0.4, 1e-9);
  REQUIRE(!sweep.bvp_strictly_increasing);  // flat case: monotonicity needs a saddle
  test_pass("flat drift keeps the BVP solution constant across the grid");
}

void test_double_well_extremes() {
  // wells at the domain ends (width = L/2), barrier h in the middle
  SaddleProblem dw;
  dw.drift.kind = DriftKind::double_well;
  dw.drift.h = 1.0;
  dw.drift.width = 0.5;
  dw.drift.center = 0.5;
  dw.s0 = 0.25;  // inside the left basin
  dw.sigma2 = 0.02;
  double p_small = bvp_exit_probability(dw);
  REQUIRE(p_small < 0.01);
  dw.sigma2 = 5.0;
  double p_large = bvp_exit_probability(dw);
  REQUIRE(p_large > 0.2);
  REQUIRE(p_large < 0.5);  // approaches the driftless s0/L from below
  dw.sigma2 = 0.5;
  double p_mid = bvp_exit_probability(dw);
  REQUIRE(p_small < p_mid && p_mid < p_large);

  // monotone in sigma^2 across a grid for the two-basin drift
  SweepResult sweep = monotonicity_sweep(dw, {0.05, 0.1, 0.2, 0.4, 0.8}, 300, 5);
  REQUIRE(sweep.bvp_strictly_increasing);
  test_pass("two-basin drift: escape grows from ~0 toward s0/L");
}

void test_step_cap_handling() {
  // tiny noise, tiny steps, low cap: most paths cap -> misconfiguration error
  SaddleProblem p;
  p.drift.kind = DriftKind::zero;
  p.s0 = 0.5;
  p.sigma2 = 1e-6;
  p.eta = 1e-6;
  REQUIRE_THROWS_AS(simulate_exit(p, 100, 1, /*step_cap=*/2000), NumericError);
  REQUIRE_THROWS_AS(simulate_exit(p, 50, 1), ConfigError);  // n_paths minimum
  test_pass("step-cap saturation and path-count guards");
}

void test_discretization_bias_shrinks() {
  // |p_hat - p_bvp| <= 3 se + C sqrt(eta), with the discrepancy shrinking
  // as eta decreases (Euler exit estimates carry O(sqrt(eta)) boundary bias)
  const double allowance_coeff = 0.5;
  SaddleProblem base = saddle_problem(0.2);
  double p_ref = bvp_exit_probability(base);
  double prev_gap = 1.0;
  int shrink_count = 0;
  for (double eta : {1e-2, 1e-3, 1e-4}) {
    SaddleProblem p = base;
    p.eta = eta;
    EscapeEstimate est = simulate_exit(p, 4000, 17, kDefaultStepCap, 2);
    double gap = std::abs(est.p_hat - p_ref);
    REQUIRE_MSG(gap <= 3.0 * est.se + allowance_coeff * std::sqrt(eta),
                "eta %.0e gap %.4f se %.4f", eta, gap, est.se);
    if (gap <= prev_gap + 2.0 * est.se) ++shrink_count;
    prev_gap = gap;
  }
  REQUIRE(shrink_count >= 2);
  test_pass("MC-BVP discrepancy within allowance and shrinking with eta");
}

void test_variance_shapley_game() {
  // two-level synthetic game: coalition noise mixes good and poor basins;
  // exact Shapley must increase with a player's variance contribution
  std::vector<double> sigma2{0.05, 0.1, 0.2, 0.35, 0.6};
  const double v_good = -10.0, v_poor = -100.0;
  auto v = [&](std::span<const int> ids, Fidelity) {
    if (ids.empty()) return v_poor;
    double mean = 0.0;
    for (int i : ids) mean += sigma2.at(i);
    mean /= static_cast<double>(ids.size());
    SaddleProblem p = saddle_problem(mean);
    double esc = bvp_exit_probability(p);
    return esc * v_good + (1.0 - esc) * v_poor;
  };
  ValuationReport rep = shapley_exact(static_cast<int>(sigma2.size()), v);
  for (std::size_t i = 1; i < sigma2.size(); ++i)
    REQUIRE_MSG(rep.per_trajectory[i].shapley > rep.per_trajectory[i - 1].shapley,
                "phi[%zu]=%.6f phi[%zu]=%.6f", i, rep.per_trajectory[i].shapley, i - 1,
                rep.per_trajectory[i - 1].shapley);
  test_pass("synthetic game: exact value increases with variance contribution");
}

}  // namespace

int main() {
  test_zero_drift_bvp();
  test_zero_drift_mc();
  test_symmetric_midpoint();
  test_erf_closed_form();
  test_boundary_limits();
  test_monotonicity_sweep();
  test_zero_drift_sweep_constant();
  test_double_well_extremes();
  test_step_cap_handling();
  test_discretization_bias_shrinks();
  test_variance_shapley_game();
  std::printf("test_saddle: all passed\n");
  return 0;
}
