#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lqr.hpp"
#include "metrics.hpp"

namespace tvlab {

enum class AgentKind { vanilla, whitened, natural_gradient };

std::string to_string(AgentKind kind);
AgentKind agent_kind_from_string(const std::string& name);

struct Whitening {
  VectorXd mean;       // pooled state mean
  MatrixXd transform;  // (Sigma_x + ridge I)^(-1/2), symmetric PD
};

struct AgentVariant {
  AgentKind kind = AgentKind::vanilla;
  std::optional<Whitening> whitening;  // present iff kind == whitened
  double fisher_damping_rel = 1e-6;    // damping = rel * trace(F) / dim

  void validate(int n) const;
};

// Fits the whitener for `whitened`; other kinds need no data.
AgentVariant make_variant(AgentKind kind, const Dataset& ds);

struct GradEstimate {
  MatrixXd grad;  // m x n
  std::vector<int> source_ids;
};

struct VarianceProxy {
  MatrixXd sigma_hat;  // (n m) x (n m), PSD
  double lambda_max = 0.0;
};

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Everything defining the coalition characteristic function v(S).
struct CharFnConfig {
  int T = 50;              // training steps
  double eta = 1e-4;       // learning rate
  AdamParams adam;
  double grad_clip = 0.01;  // element-wise, +/-grad_clip
  double gain_clip_lo = -1.0;
  double gain_clip_hi = 1.0;
  int n_eval_rollouts = 50;
  double proxy_fraction = 0.8;  // share of evaluations using the one-step proxy
  MatrixXd K0;                  // initial gain, m x n
  std::uint64_t base_seed = 0;
  RolloutConfig eval_rollout;   // initial-state distribution for J-hat (seed ignored)

  void validate(const SystemSpec& sys) const;
};

// REINFORCE score-function estimator
//   ghat = -(1/sigma_a^2) sum_k G_k eps_k x_k',  G_k = sum_{j>=k} r_j.
// With rewards r = -l this is the ascent direction on expected return;
// its mean equals -grad J(K) for the cost J.  Training descends the cost
// by stepping along +ghat.
GradEstimate reinforce_grad(const Trajectory& traj, const PolicySpec& pol);
GradEstimate reinforce_grad(const Trajectory& traj, const PolicySpec& pol,
                            const AgentVariant& variant);

// Mean per-trajectory gradient over the coalition (after the variant's
// state transform); natural_gradient preconditions the mean by
// (F_S + damping I)^(-1).
GradEstimate coalition_grad(const Dataset& ds, std::span<const int> ids,
                            const PolicySpec& pol, const AgentVariant& variant);

// sigma_hat = (1/sigma_a^2) sum_k G_k^2 (x_k x_k') (x) I_m with the
// variant's state transform applied to x.
VarianceProxy variance_proxy(const Trajectory& traj, const PolicySpec& pol);
VarianceProxy variance_proxy(const Trajectory& traj, const PolicySpec& pol,
                             const AgentVariant& variant);

Whitening fit_whitener(const Dataset& ds);

// F_S = (1/sigma_a^2) mean_S[S_x(tau)] (x) I_m
MatrixXd fisher_matrix(const Dataset& ds, std::span<const int> ids, const PolicySpec& pol);

struct TrainTraceRow {
  int step = 0;
  double j_estimate = 0.0;
  MatrixXd gain;
};

struct TrainResult {
  MatrixXd gain;  // K_T
  std::vector<TrainTraceRow> trace;
  int n_capped_rollouts = 0;
};

// T steps of on-policy REINFORCE with Adam.  Each step samples one
// coalition member (stream derived from base_seed and the coalition's
// content key), re-rolls it under the current gain with its stored seed,
// clips the gradient element-wise, applies Adam, clips the gain.
TrainResult train(const Dataset& ds, std::span<const int> ids, const CharFnConfig& cfg,
                  const AgentVariant& variant, bool record_trace = false);

enum class Fidelity { proxy, full };

struct CharFnStats {
  long n_capped_rollouts = 0;
  bool capped = false;  // any evaluation rollout hit the cost cap
};

// Content-based coalition key (fold of sorted member seeds), so duplicate
// trajectories are interchangeable in seeding and memoization.
std::uint64_t coalition_key(const Dataset& ds, std::span<const int> ids);

// v(S) at an explicit fidelity; v(empty) = -J-hat(K0) regardless.
double char_fn_at(const Dataset& ds, std::span<const int> ids, const CharFnConfig& cfg,
                  const AgentVariant& variant, std::uint64_t eval_seed, Fidelity fidelity,
                  CharFnStats* stats = nullptr);

// v(S) with the fidelity drawn Bernoulli(proxy_fraction) from
// (eval_seed, coalition key).
double char_fn(const Dataset& ds, std::span<const int> ids, const CharFnConfig& cfg,
               const AgentVariant& variant, std::uint64_t eval_seed,
               CharFnStats* stats = nullptr);

// Shared caches for valuation runs: per-trajectory transformed gradients
// and state covariances are computed once; proxy evaluations reuse them.
// Thread-safe after construction.
class CoalitionEvaluator {
 public:
  CoalitionEvaluator(const Dataset& ds, const CharFnConfig& cfg, const AgentVariant& variant,
                     std::uint64_t eval_seed);

  double value(std::span<const int> ids, Fidelity fidelity) const;
  std::uint64_t key(std::span<const int> ids) const;

  long n_capped_rollouts() const { return capped_rollouts_.load(); }
  long n_capped_evaluations() const { return capped_evaluations_.load(); }

 private:
  const Dataset& ds_;
  CharFnConfig cfg_;
  AgentVariant variant_;
  std::uint64_t eval_seed_;
  double v_empty_ = 0.0;
  std::vector<MatrixXd> cached_grads_;   // variant-transformed, per trajectory
  std::vector<MatrixXd> cached_state_cov_;  // raw S_x, for Fisher
  mutable std::atomic<long> capped_rollouts_{0};
  mutable std::atomic<long> capped_evaluations_{0};
};

}  // namespace tvlab
