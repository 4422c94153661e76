#include "lqr.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "errors.hpp"
#include "rng.hpp"

namespace tvlab {

namespace {

constexpr std::uint64_t kTagRollout = 0x726f6c6cull;   // per-rollout streams
constexpr std::uint64_t kTagDataset = 0x64617461ull;   // dataset generation

bool symmetric_within(const MatrixXd& a, double tol) {
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace

void SystemSpec::validate() const {
  if (A.rows() == 0 || A.rows() != A.cols())
    throw ConfigError("system: A must be square and nonempty");
  if (B.rows() != A.rows() || B.cols() == 0)
    throw ConfigError("system: B must be n x m with m >= 1");
  if (Q.rows() != A.rows() || Q.cols() != A.rows())
    throw ConfigError("system: Q must be n x n");
  if (R.rows() != B.cols() || R.cols() != B.cols())
    throw ConfigError("system: R must be m x m");
  double scale_q = std::max(Q.cwiseAbs().maxCoeff(), 1.0);
  double scale_r = std::max(R.cwiseAbs().maxCoeff(), 1.0);
  if (!symmetric_within(Q, 1e-9 * scale_q)) throw ConfigError("system: Q must be symmetric");
  if (!symmetric_within(R, 1e-9 * scale_r)) throw ConfigError("system: R must be symmetric");
  if (lambda_min(Q) < -1e-9 * scale_q) throw ConfigError("system: Q must be positive semidefinite");
  if (lambda_min(R) <= 0.0) throw ConfigError("system: R must be positive definite");
  if (sigma_w < 0.0) throw ConfigError("system: sigma_w must be >= 0");
  if (H < 1) throw ConfigError("system: horizon H must be >= 1");
  if (!A.allFinite() || !B.allFinite() || !Q.allFinite() || !R.allFinite())
    throw ConfigError("system: matrices must be finite");
}

void PolicySpec::validate(const SystemSpec& sys) const {
  if (K.rows() != sys.m() || K.cols() != sys.n())
    throw ConfigError("policy: K must be m x n");
  if (!K.allFinite()) throw ConfigError("policy: K must be finite");
  if (!(sigma_a > 0.0)) throw ConfigError("policy: sigma_a must be > 0");
}

void RolloutConfig::validate(const SystemSpec& sys) const {
  if (initial_state == InitialStateMode::fixed && x0.size() != sys.n())
    throw ConfigError("rollout: fixed initial state must have dimension n");
  if (initial_state == InitialStateMode::gaussian) {
    if (mean.size() != 0 && mean.size() != sys.n())
      throw ConfigError("rollout: gaussian mean must have dimension n");
    if (std < 0.0) throw ConfigError("rollout: gaussian std must be >= 0");
  }
  if (excitation == ExcitationMode::dither) {
    if (dither_amplitude < 0.0) throw ConfigError("rollout: dither amplitude must be >= 0");
    if (dither_amp_jitter < 0.0 || dither_amp_jitter > 1.0)
      throw ConfigError("rollout: dither amplitude jitter must be in [0, 1]");
    if (dither_freq_hi < dither_freq_lo)
      throw ConfigError("rollout: dither frequency range must be ordered");
  }
}

double stage_reward(const SystemSpec& sys, const VectorXd& x, const VectorXd& u) {
  double lx = x.dot(sys.Q * x);
  double lu = u.dot(sys.R * u);
  return -(lx + lu);
}

namespace {

VectorXd initial_state(const SystemSpec& sys, const RolloutConfig& cfg, Rng& rng) {
  const int n = sys.n();
  switch (cfg.initial_state) {
    case InitialStateMode::fixed:
      return cfg.x0;
    case InitialStateMode::gaussian: {
      VectorXd x = cfg.mean.size() == n ? cfg.mean : VectorXd::Zero(n);
      for (int i = 0; i < n; ++i) x(i) += cfg.std * rng.normal();
      return x;
    }
    case InitialStateMode::grid: {
      // deterministic lattice on [-1.5, 1.5]^n, 5 points per axis
      const int per_axis = 5;
      std::uint64_t idx = rng.next_u64();
      VectorXd x(n);
      for (int i = 0; i < n; ++i) {
        int j = static_cast<int>(idx % per_axis);
        idx /= per_axis;
        x(i) = -1.5 + 3.0 * j / (per_axis - 1);
      }
      return x;
    }
  }
  throw ConfigError("rollout: unknown initial state mode");
}

}  // namespace

Trajectory rollout_truncated(const SystemSpec& sys, const PolicySpec& pol,
                             const RolloutConfig& cfg) {
  sys.validate();
  pol.validate(sys);
  cfg.validate(sys);

  const int n = sys.n();
  const int m = sys.m();
  Rng noise_rng(cfg.seed);
  Rng character_rng(cfg.split_character_stream ? cfg.character_seed : cfg.seed);
  Rng& scenario = cfg.split_character_stream ? character_rng : noise_rng;

  const bool dither = cfg.excitation == ExcitationMode::dither && !cfg.zero_noise;
  double amp = cfg.dither_amplitude;
  VectorXd freq(m), phase(m);
  if (dither) {
    amp *= 1.0 - cfg.dither_amp_jitter * scenario.uniform();
    for (int j = 0; j < m; ++j) {
      freq(j) = cfg.dither_freq_lo + (cfg.dither_freq_hi - cfg.dither_freq_lo) * scenario.uniform();
      phase(j) = 2.0 * std::numbers::pi * scenario.uniform();
    }
  }

  Trajectory traj;
  traj.seed = cfg.seed;
  traj.states.reserve(sys.H + 1);
  traj.actions.reserve(sys.H);
  traj.noises.reserve(sys.H);
  traj.rewards.reserve(sys.H);

  VectorXd x = initial_state(sys, cfg, scenario);
  traj.states.push_back(x);

  for (int k = 0; k < sys.H; ++k) {
    // fixed draw order per step: eps first, then w, so noise streams stay
    // paired when sigma settings change
    VectorXd eps(m), w(n);
    for (int j = 0; j < m; ++j) eps(j) = noise_rng.normal();
    for (int i = 0; i < n; ++i) w(i) = noise_rng.normal();

    if (cfg.zero_noise) {
      eps.setZero();
      w.setZero();
    } else {
      eps *= pol.sigma_a;
      w *= sys.sigma_w;
      if (dither) {
        for (int j = 0; j < m; ++j)
          eps(j) += amp * std::sin(2.0 * std::numbers::pi * freq(j) * k + phase(j));
      }
    }

    VectorXd u = -pol.K * x + eps;
    traj.actions.push_back(u);
    traj.noises.push_back(eps);
    traj.rewards.push_back(stage_reward(sys, x, u));

    x = sys.A * x + sys.B * u + w;
    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > kStateOverflowGuard) {
      traj.diverged_at = k + 1;
      return traj;
    }
    traj.states.push_back(x);
  }
  return traj;
}

Trajectory rollout(const SystemSpec& sys, const PolicySpec& pol, const RolloutConfig& cfg) {
  Trajectory traj = rollout_truncated(sys, pol, cfg);
  if (traj.diverged())
    throw DivergenceError(
        "rollout diverged at step " + std::to_string(traj.diverged_at), traj.diverged_at);
  return traj;
}

double trajectory_cost(const Trajectory& traj) {
  if (traj.diverged()) return kRolloutCostCap;
  double total = 0.0;
  for (double r : traj.rewards) total -= r;
  return std::min(total, kRolloutCostCap);
}

CostEstimate estimate_cost(const SystemSpec& sys, const PolicySpec& pol,
                           const RolloutConfig& eval_cfg, int n_rollouts,
                           std::uint64_t seed) {
  if (n_rollouts < 1) throw ConfigError("estimate_cost: n_rollouts must be >= 1");
  CostEstimate est;
  est.n_rollouts = n_rollouts;
  Accumulator sum, sumsq;
  for (int i = 0; i < n_rollouts; ++i) {
    RolloutConfig cfg = eval_cfg;
    cfg.seed = mix_seed({seed, kTagRollout, static_cast<std::uint64_t>(i)});
    Trajectory traj = rollout_truncated(sys, pol, cfg);
    double cost = trajectory_cost(traj);
    if (traj.diverged() || cost >= kRolloutCostCap) ++est.n_capped;
    sum.add(cost);
    sumsq.add(cost * cost);
  }
  est.mean = sum.value() / n_rollouts;
  if (n_rollouts > 1) {
    double var = (sumsq.value() - n_rollouts * est.mean * est.mean) / (n_rollouts - 1);
    est.se = std::sqrt(std::max(var, 0.0) / n_rollouts);
  }
  return est;
}

Dataset generate_dataset(const SystemSpec& sys, const PolicySpec& pol,
                         const RolloutConfig& gen_cfg, int count, std::uint64_t seed) {
  if (count < 1) throw ConfigError("generate_dataset: count must be >= 1");
  Dataset ds;
  ds.system = sys;
  ds.policy = pol;
  ds.generation = gen_cfg;
  ds.trajectories.reserve(count);
  for (int i = 0; i < count; ++i) {
    Trajectory traj;
    bool ok = false;
    for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
      RolloutConfig cfg = gen_cfg;
      cfg.seed = mix_seed({seed, kTagDataset, static_cast<std::uint64_t>(i), attempt});
      traj = rollout_truncated(sys, pol, cfg);
      if (!traj.diverged()) {
        ok = true;
        break;
      }
    }
    if (!ok)
      throw DivergenceError("generate_dataset: trajectory " + std::to_string(i) +
                                " diverges for all retry seeds",
                            traj.diverged_at);
    traj.id = i;
    ds.trajectories.push_back(std::move(traj));
  }
  return ds;
}

}  // namespace tvlab
