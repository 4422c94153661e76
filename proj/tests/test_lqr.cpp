#include "lqr.hpp"

#include "errors.hpp"
#include "rng.hpp"
#include "test_util.hpp"

using namespace tvlab;

namespace {

SystemSpec double_integrator(int horizon = 10, double sigma_w = 0.0) {
  SystemSpec sys;
  sys.A = (MatrixXd(2, 2) << 1, 1, 0, 1).finished();
  sys.B = (MatrixXd(2, 1) << 0, 1).finished();
  sys.Q = MatrixXd::Identity(2, 2);
  sys.R = (MatrixXd(1, 1) << 0.1).finished();
  sys.sigma_w = sigma_w;
  sys.H = horizon;
  return sys;
}

PolicySpec zero_policy() {
  PolicySpec pol;
  pol.K = MatrixXd::Zero(1, 2);
  pol.sigma_a = 0.5;
  return pol;
}

RolloutConfig fixed_start(double x0, double x1, std::uint64_t seed = 0) {
  RolloutConfig cfg;
  cfg.initial_state = InitialStateMode::fixed;
  cfg.x0 = (VectorXd(2) << x0, x1).finished();
  cfg.seed = seed;
  cfg.zero_noise = true;
  return cfg;
}

void test_deterministic_double_integrator() {
  SystemSpec sys = double_integrator(4);
  PolicySpec pol = zero_policy();

  Trajectory a = rollout(sys, pol, fixed_start(1, 0));
  REQUIRE_CLOSE(a.states[1](0), 1.0, 0.0);
  REQUIRE_CLOSE(a.states[1](1), 0.0, 0.0);
  REQUIRE_CLOSE(a.states[2](0), 1.0, 0.0);

  Trajectory b = rollout(sys, pol, fixed_start(0, 1));
  REQUIRE_CLOSE(b.states[1](0), 1.0, 0.0);
  REQUIRE_CLOSE(b.states[1](1), 1.0, 0.0);
  REQUIRE_CLOSE(b.states[2](0), 2.0, 0.0);
  REQUIRE_CLOSE(b.states[2](1), 1.0, 0.0);
  test_pass("zero-noise double integrator iterates exactly");
}

void test_stage_reward() {
  SystemSpec sys = double_integrator();
  VectorXd x = (VectorXd(2) << 1, 0).finished();
  VectorXd u = (VectorXd(1) << 2).finished();
  REQUIRE_CLOSE(stage_reward(sys, x, u), -1.4, 1e-15);
  test_pass("stage reward matches direct substitution");
}

void test_paper_system_accepted() {
  SystemSpec sys = double_integrator(100, 0.1);
  PolicySpec pol = zero_policy();
  RolloutConfig cfg;
  cfg.initial_state = InitialStateMode::gaussian;
  cfg.seed = 7;
  Trajectory traj = rollout(sys, pol, cfg);
  REQUIRE(traj.steps() == 100);
  REQUIRE(static_cast<int>(traj.states.size()) == 101);
  test_pass("paper-scale system accepted without error");
}

void test_determinism_bit_identical() {
  SystemSpec sys = double_integrator(50, 0.1);
  PolicySpec pol = zero_policy();
  RolloutConfig cfg;
  cfg.initial_state = InitialStateMode::gaussian;
  cfg.excitation = ExcitationMode::dither;
  cfg.dither_amplitude = 0.3;
  cfg.seed = 1234;
  Trajectory a = rollout(sys, pol, cfg);
  Trajectory b = rollout(sys, pol, cfg);
  REQUIRE(a.states.size() == b.states.size());
  for (std::size_t k = 0; k < a.states.size(); ++k)
    REQUIRE((a.states[k].array() == b.states[k].array()).all());
  for (std::size_t k = 0; k < a.rewards.size(); ++k) REQUIRE(a.rewards[k] == b.rewards[k]);
  test_pass("identical specs give bit-identical trajectories");
}

void test_reward_and_action_consistency() {
  SystemSpec sys = double_integrator(40, 0.1);
  PolicySpec pol;
  pol.K = (MatrixXd(1, 2) << 0.2, 0.4).finished();
  pol.sigma_a = 0.5;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RolloutConfig cfg;
    cfg.initial_state = InitialStateMode::gaussian;
    cfg.excitation = ExcitationMode::dither;
    cfg.dither_amplitude = 0.5;
    cfg.seed = seed;
    Trajectory traj = rollout(sys, pol, cfg);
    for (int k = 0; k < traj.steps(); ++k) {
      double r = stage_reward(sys, traj.states[k], traj.actions[k]);
      REQUIRE(traj.rewards[k] <= 0.0);
      double rel = std::abs(r - traj.rewards[k]) / std::max(std::abs(r), 1e-300);
      REQUIRE(rel <= 1e-12);
      VectorXd resid = traj.actions[k] + pol.K * traj.states[k] - traj.noises[k];
      REQUIRE(resid.cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
  test_pass("stored rewards and actions reproduce from (x, u, eps)");
}

void test_estimate_cost_analytic() {
  {
    SystemSpec sys = double_integrator(10);
    PolicySpec pol = zero_policy();
    RolloutConfig cfg = fixed_start(0, 0);
    CostEstimate est = estimate_cost(sys, pol, cfg, 5, 99);
    REQUIRE_CLOSE(est.mean, 0.0, 0.0);
    REQUIRE_CLOSE(est.se, 0.0, 0.0);
  }
  {
    SystemSpec sys = double_integrator(1);
    PolicySpec pol = zero_policy();
    RolloutConfig cfg = fixed_start(1, 0);
    CostEstimate est = estimate_cost(sys, pol, cfg, 3, 99);
    REQUIRE_CLOSE(est.mean, 1.0, 1e-15);
  }
  {
    // reproducible bit-for-bit across identical seeds
    SystemSpec sys = double_integrator(60, 0.1);
    PolicySpec pol;
    pol.K = (MatrixXd(1, 2) << 0.2, 0.6).finished();
    pol.sigma_a = 0.5;
    RolloutConfig cfg;
    cfg.initial_state = InitialStateMode::gaussian;
    CostEstimate a = estimate_cost(sys, pol, cfg, 50, 4242);
    CostEstimate b = estimate_cost(sys, pol, cfg, 50, 4242);
    REQUIRE(a.mean == b.mean);
    REQUIRE(a.se == b.se);
    REQUIRE(std::isfinite(a.mean));
  }
  test_pass("cost estimates: analytic cases and determinism");
}

void test_monotone_cost_in_noise() {
  PolicySpec pol;
  pol.K = (MatrixXd(1, 2) << 0.2, 0.6).finished();
  pol.sigma_a = 0.5;
  double mean_diff = 0.0;
  const int n_seeds = 30;
  for (int s = 0; s < n_seeds; ++s) {
    RolloutConfig cfg;
    cfg.initial_state = InitialStateMode::gaussian;
    SystemSpec quiet = double_integrator(40, 0.0);
    SystemSpec noisy = double_integrator(40, 0.1);
    CostEstimate a = estimate_cost(quiet, pol, cfg, 10, 1000 + s);
    CostEstimate b = estimate_cost(noisy, pol, cfg, 10, 1000 + s);
    mean_diff += b.mean - a.mean;
  }
  mean_diff /= n_seeds;
  REQUIRE_MSG(mean_diff > 0.0, "paired noise comparison: mean diff %.6g", mean_diff);
  test_pass("process noise raises seed-paired cost on average");
}

void test_divergence() {
  SystemSpec sys = double_integrator(200);
  sys.A = 2.0 * MatrixXd::Identity(2, 2);  // hard exponential blow-up
  PolicySpec pol = zero_policy();
  RolloutConfig cfg = fixed_start(1, 1);
  cfg.zero_noise = true;

  bool threw = false;
  try {
    rollout(sys, pol, cfg);
  } catch (const DivergenceError& e) {
    threw = true;
    REQUIRE(e.step > 0);
    REQUIRE(e.step <= 200);
  }
  REQUIRE(threw);

  Trajectory truncated = rollout_truncated(sys, pol, cfg);
  REQUIRE(truncated.diverged());
  REQUIRE(truncated.states.size() == truncated.rewards.size());
  REQUIRE_CLOSE(trajectory_cost(truncated), kRolloutCostCap, 0.0);

  CostEstimate est = estimate_cost(sys, pol, cfg, 4, 5);
  REQUIRE(est.n_capped == 4);
  REQUIRE_CLOSE(est.mean, kRolloutCostCap, 0.0);
  test_pass("overflow guard truncates, caps cost, and reports the step");
}

void test_generate_dataset() {
  SystemSpec sys = double_integrator(30, 0.1);
  PolicySpec pol = zero_policy();
  RolloutConfig gen;
  gen.initial_state = InitialStateMode::gaussian;
  gen.excitation = ExcitationMode::dither;
  gen.dither_amplitude = 0.5;
  Dataset ds = generate_dataset(sys, pol, gen, 12, 77);
  REQUIRE(ds.size() == 12);
  for (int i = 0; i < ds.size(); ++i) {
    REQUIRE(ds.trajectories[i].id == i);
    REQUIRE(!ds.trajectories[i].diverged());
  }
  // distinct seeds, deterministic regeneration
  Dataset again = generate_dataset(sys, pol, gen, 12, 77);
  for (int i = 0; i < ds.size(); ++i) {
    REQUIRE(ds.trajectories[i].seed == again.trajectories[i].seed);
    REQUIRE(ds.trajectories[i].rewards == again.trajectories[i].rewards);
  }
  test_pass("dataset generation is clean and reproducible");
}

void test_grid_initial_state() {
  SystemSpec sys = double_integrator(5);
  PolicySpec pol = zero_policy();
  RolloutConfig cfg;
  cfg.initial_state = InitialStateMode::grid;
  cfg.zero_noise = true;
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    cfg.seed = seed;
    Trajectory t = rollout(sys, pol, cfg);
    // lattice points on [-1.5, 1.5]^n, multiples of 0.75
    for (int i = 0; i < 2; ++i) {
      double v = t.states[0](i);
      REQUIRE(v >= -1.5 && v <= 1.5);
      REQUIRE_CLOSE(std::round(v / 0.75) * 0.75, v, 1e-12);
    }
    Trajectory again = rollout(sys, pol, cfg);
    REQUIRE((t.states[0].array() == again.states[0].array()).all());
  }
  test_pass("grid mode draws deterministic lattice initial states");
}

void test_config_validation() {
  SystemSpec sys = double_integrator();
  sys.R = MatrixXd::Zero(1, 1);  // not PD
  REQUIRE_THROWS_AS(sys.validate(), ConfigError);

  SystemSpec bad_dim = double_integrator();
  bad_dim.B = MatrixXd::Zero(3, 1);
  REQUIRE_THROWS_AS(bad_dim.validate(), ConfigError);

  PolicySpec pol = zero_policy();
  pol.sigma_a = 0.0;
  REQUIRE_THROWS_AS(pol.validate(double_integrator()), ConfigError);
  test_pass("invalid specs are rejected");
}

}  // namespace

int main() {
  test_deterministic_double_integrator();
  test_stage_reward();
  test_paper_system_accepted();
  test_determinism_bit_identical();
  test_reward_and_action_consistency();
  test_estimate_cost_analytic();
  test_monotone_cost_in_noise();
  test_divergence();
  test_generate_dataset();
  test_grid_initial_state();
  test_config_validation();
  std::printf("test_lqr: all passed\n");
  return 0;
}
