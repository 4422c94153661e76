#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tvlab {

enum class DriftKind { zero, saddle_quadratic, double_well };

std::string to_string(DriftKind k);
DriftKind drift_kind_from_string(const std::string& name);

// 1-D potential f driving s_{t+1} = s_t - eta f'(s_t) + sqrt(eta) zeta_t.
struct SaddleDrift {
  DriftKind kind = DriftKind::zero;
  // saddle_quadratic: f(s) = -(beta/2) (s - s_star)^2, barrier top at s_star
  double beta = 1.0;
  double s_star = 0.5;
  // double_well: f(s) = h (1 - ((s - center)/width)^2)^2, wells at
  // center +/- width; with center = L/2 and width = L/2 the basins sit at
  // the domain ends with an h-barrier between them
  double h = 1.0;
  double width = 0.5;
  double center = 0.5;

  double f(double s) const;
  double fprime(double s) const;
};

struct SaddleProblem {
  SaddleDrift drift;
  double L = 1.0;       // exit-right boundary; domain is [0, L]
  double s0 = 0.4;      // start, in (0, L)
  double eta = 1e-3;    // step size
  double sigma2 = 0.1;  // noise variance of zeta

  void validate() const;
  bool eta_warning() const;  // eta above the 0.01 L^2 / sigma^2 smallness threshold
};

struct EscapeEstimate {
  double p_hat = 0.0;  // MC fraction exiting at L
  double se = 0.0;     // binomial
  double p_bvp = 0.0;  // quadrature solution
  long n_paths = 0;
  long n_capped = 0;   // paths that hit the step cap
  bool warning = false;  // > 1% capped
};

inline constexpr long kDefaultStepCap = 10000000;  // 1e7

// Monte Carlo exit-side frequency; a path exits at its first step strictly
// outside [0, L].  Throws NumericError when more than half the paths cap.
EscapeEstimate simulate_exit(const SaddleProblem& prob, long n_paths, std::uint64_t seed,
                             long step_cap = kDefaultStepCap, int workers = 1);

// Closed-form boundary-value solution
//   p(s0) = int_0^s0 exp(2 f(t)/sigma^2) dt / int_0^L exp(2 f(t)/sigma^2) dt
// evaluated by adaptive quadrature in the log-shifted domain so barrier
// integrals cannot overflow.
double bvp_exit_probability(const SaddleProblem& prob);

struct SweepRow {
  double sigma2 = 0.0;
  double p_hat = 0.0;
  double se = 0.0;
  double p_bvp = 0.0;
  int d_p_bvp_sign = 0;  // sign of the BVP increment from the previous grid point
};

struct SweepResult {
  std::vector<SweepRow> rows;
  bool bvp_strictly_increasing = false;
  bool mc_consistent = false;  // every MC increment > -2 combined SE
};

SweepResult monotonicity_sweep(const SaddleProblem& base, const std::vector<double>& sigma2_grid,
                               long n_paths, std::uint64_t seed, int workers = 1);

}  // namespace tvlab
