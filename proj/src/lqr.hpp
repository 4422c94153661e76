#pragma once

#include <cstdint>
#include <vector>

#include "linalg.hpp"

namespace tvlab {

// Any |state component| beyond the guard aborts the rollout; a capped cost
// stands in for the diverged rollout so coalition comparisons stay ordered.
inline constexpr double kStateOverflowGuard = 1e12;
inline constexpr double kRolloutCostCap = 1e9;

struct SystemSpec {
  MatrixXd A;       // n x n state transition
  MatrixXd B;       // n x m input map
  double sigma_w = 0.0;  // process-noise std; covariance sigma_w^2 * I_n
  MatrixXd Q;       // n x n state cost weight, symmetric PSD
  MatrixXd R;       // m x m input cost weight, symmetric PD
  int H = 1;        // horizon, steps

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }
  void validate() const;
};

struct PolicySpec {
  MatrixXd K;            // m x n feedback gain; u = -K x + eps
  double sigma_a = 0.5;  // exploration noise std

  void validate(const SystemSpec& sys) const;
};

enum class InitialStateMode { fixed, gaussian, grid };
enum class ExcitationMode { none, dither };

struct RolloutConfig {
  InitialStateMode initial_state = InitialStateMode::gaussian;
  VectorXd x0;      // fixed mode
  VectorXd mean;    // gaussian mode; empty means zero
  double std = 1.0;

  // Optional sinusoidal input dither used during dataset generation to
  // spread persistence of excitation.  Frequency and phase are drawn per
  // trajectory (per input dimension); the amplitude is
  // dither_amplitude * (1 - dither_amp_jitter * U[0,1]), so jitter 0 keeps
  // it fixed and jitter 1 spreads it over [0, dither_amplitude].
  ExcitationMode excitation = ExcitationMode::none;
  double dither_amplitude = 0.0;
  double dither_amp_jitter = 0.0;
  double dither_freq_lo = 0.0;  // cycles per step
  double dither_freq_hi = 0.5;

  std::uint64_t seed = 0;

  // When set, the trajectory "character" (dither frequency/phase/amplitude
  // and the initial state) is drawn from character_seed while the per-step
  // noises come from seed.  Training re-rolls use this to resample a stored
  // trajectory's scenario under a new gain with fresh noise.
  std::uint64_t character_seed = 0;
  bool split_character_stream = false;

  // Test hook: forces w_k = eps_k = 0.  Not settable from config files.
  bool zero_noise = false;

  void validate(const SystemSpec& sys) const;
};

// One rollout.  For clean trajectories states has H+1 entries and the
// other sequences H; a diverged trajectory is truncated with the
// offending state dropped (states, actions, noises, rewards all equal
// length) and diverged_at holding the step index of the guard trip.
struct Trajectory {
  std::vector<VectorXd> states;
  std::vector<VectorXd> actions;
  std::vector<VectorXd> noises;  // stored actuation noise eps_k = u_k + K x_k
  std::vector<double> rewards;   // r_k = -(x'Qx + u'Ru)
  std::uint64_t seed = 0;
  int id = 0;
  int diverged_at = -1;

  bool diverged() const { return diverged_at >= 0; }
  int steps() const { return static_cast<int>(rewards.size()); }
};

struct Dataset {
  SystemSpec system;
  PolicySpec policy;
  RolloutConfig generation;  // carried for seed-tied re-rolls during training
  std::vector<Trajectory> trajectories;

  int size() const { return static_cast<int>(trajectories.size()); }
};

double stage_reward(const SystemSpec& sys, const VectorXd& x, const VectorXd& u);

// Strict rollout: throws DivergenceError when the guard trips.
Trajectory rollout(const SystemSpec& sys, const PolicySpec& pol, const RolloutConfig& cfg);

// Same dynamics but returns the truncated trajectory instead of throwing.
Trajectory rollout_truncated(const SystemSpec& sys, const PolicySpec& pol,
                             const RolloutConfig& cfg);

// Total cost sum_k l_k, capped at kRolloutCostCap (diverged rollouts
// contribute the cap exactly).
double trajectory_cost(const Trajectory& traj);

struct CostEstimate {
  double mean = 0.0;
  double se = 0.0;
  int n_rollouts = 0;
  int n_capped = 0;  // diverged or cost-capped rollouts
};

// J-hat(K): mean total cost over n_rollouts, per-rollout seeds derived
// from `seed` so estimates pair across policies.
CostEstimate estimate_cost(const SystemSpec& sys, const PolicySpec& pol,
                           const RolloutConfig& eval_cfg, int n_rollouts,
                           std::uint64_t seed);

// Draws N clean trajectories (diverged draws are retried with a derived
// seed).  Trajectory ids are 0..N-1; each stores the seed that produced it.
Dataset generate_dataset(const SystemSpec& sys, const PolicySpec& pol,
                         const RolloutConfig& gen_cfg, int count, std::uint64_t seed);

}  // namespace tvlab
