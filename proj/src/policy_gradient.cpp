#include "policy_gradient.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"
#include "rng.hpp"

namespace tvlab {

namespace {

constexpr std::uint64_t kTagPick = 0x7069636bull;      // training member sampling
constexpr std::uint64_t kTagFidelity = 0x66696464ull;  // proxy/full Bernoulli
constexpr std::uint64_t kTagTrace = 0x74726163ull;     // trace J estimates

std::vector<double> returns_to_go(const Trajectory& traj) {
  std::vector<double> g(traj.rewards.size());
  double acc = 0.0;
  for (int k = static_cast<int>(traj.rewards.size()) - 1; k >= 0; --k) {
    acc += traj.rewards[k];
    g[k] = acc;
  }
  return g;
}

VectorXd transformed_state(const VectorXd& x, const AgentVariant& variant) {
  if (variant.kind == AgentKind::whitened)
    return variant.whitening->transform * (x - variant.whitening->mean);
  return x;
}

MatrixXd clip_elementwise(MatrixXd g, double bound) {
  for (int i = 0; i < g.rows(); ++i)
    for (int j = 0; j < g.cols(); ++j) g(i, j) = std::clamp(g(i, j), -bound, bound);
  return g;
}

MatrixXd clip_gain(MatrixXd k, double lo, double hi) {
  for (int i = 0; i < k.rows(); ++i)
    for (int j = 0; j < k.cols(); ++j) k(i, j) = std::clamp(k(i, j), lo, hi);
  return k;
}

// (F + damping I)^(-1) applied to the column-major vectorization of g;
// with F = (1/s^2) Sx (x) I_m this equals solving on the right by Sx.
MatrixXd precondition_by_fisher(const MatrixXd& g, const MatrixXd& fisher, double damping_rel) {
  const int dim = static_cast<int>(fisher.rows());
  double damping = damping_rel * fisher.trace() / dim + 1e-12;
  VectorXd v = Eigen::Map<const VectorXd>(g.data(), g.size());
  VectorXd out = solve_damped_psd(fisher, damping, v);
  return Eigen::Map<const MatrixXd>(out.data(), g.rows(), g.cols());
}

MatrixXd raw_grad_transformed(const Trajectory& traj, const PolicySpec& pol,
                              const AgentVariant& variant) {
  if (traj.noises.size() != traj.rewards.size() || traj.noises.empty())
    throw NumericError("reinforce_grad: trajectory is missing its actuation noises");
  const int steps = static_cast<int>(
      std::min(traj.states.size(), traj.noises.size()));
  const int n = static_cast<int>(traj.states[0].size());
  const int m = static_cast<int>(traj.noises[0].size());
  std::vector<double> g = returns_to_go(traj);
  MatrixXd grad = MatrixXd::Zero(m, n);
  for (int k = 0; k < steps; ++k) {
    VectorXd x = transformed_state(traj.states[k], variant);
    grad.noalias() += g[k] * traj.noises[k] * x.transpose();
  }
  grad *= -1.0 / (pol.sigma_a * pol.sigma_a);
  return grad;
}

}  // namespace

std::string to_string(AgentKind kind) {
  switch (kind) {
    case AgentKind::vanilla: return "vanilla";
    case AgentKind::whitened: return "whitened";
    case AgentKind::natural_gradient: return "npg";
  }
  return "vanilla";
}

AgentKind agent_kind_from_string(const std::string& name) {
  if (name == "vanilla") return AgentKind::vanilla;
  if (name == "whitened" || name == "whitening") return AgentKind::whitened;
  if (name == "npg" || name == "natural_gradient") return AgentKind::natural_gradient;
  throw ConfigError("unknown agent variant: " + name);
}

void AgentVariant::validate(int n) const {
  if ((kind == AgentKind::whitened) != whitening.has_value())
    throw ConfigError("variant: whitening data present iff kind is whitened");
  if (fisher_damping_rel < 0.0) throw ConfigError("variant: fisher damping must be >= 0");
  if (whitening) {
    if (whitening->mean.size() != n || whitening->transform.rows() != n ||
        whitening->transform.cols() != n)
      throw ConfigError("variant: whitening dimensions must match the state");
    if (lambda_min(whitening->transform) <= 0.0)
      throw ConfigError("variant: whitening transform must be positive definite");
  }
}

AgentVariant make_variant(AgentKind kind, const Dataset& ds) {
  AgentVariant v;
  v.kind = kind;
  if (kind == AgentKind::whitened) v.whitening = fit_whitener(ds);
  v.validate(ds.system.n());
  return v;
}

GradEstimate reinforce_grad(const Trajectory& traj, const PolicySpec& pol) {
  return reinforce_grad(traj, pol, AgentVariant{});
}

GradEstimate reinforce_grad(const Trajectory& traj, const PolicySpec& pol,
                            const AgentVariant& variant) {
  GradEstimate est;
  est.grad = raw_grad_transformed(traj, pol, variant);
  est.source_ids = {traj.id};
  return est;
}

GradEstimate coalition_grad(const Dataset& ds, std::span<const int> ids,
                            const PolicySpec& pol, const AgentVariant& variant) {
  if (ids.empty()) throw NumericError("coalition_grad: empty coalition");
  GradEstimate est;
  est.grad = MatrixXd::Zero(ds.system.m(), ds.system.n());
  for (int id : ids) {
    est.grad += raw_grad_transformed(ds.trajectories.at(id), pol, variant);
    est.source_ids.push_back(id);
  }
  est.grad /= static_cast<double>(ids.size());
  if (variant.kind == AgentKind::natural_gradient) {
    MatrixXd fisher = fisher_matrix(ds, ids, pol);
    est.grad = precondition_by_fisher(est.grad, fisher, variant.fisher_damping_rel);
  }
  return est;
}

VarianceProxy variance_proxy(const Trajectory& traj, const PolicySpec& pol) {
  return variance_proxy(traj, pol, AgentVariant{});
}

VarianceProxy variance_proxy(const Trajectory& traj, const PolicySpec& pol,
                             const AgentVariant& variant) {
  const int steps = static_cast<int>(
      std::min(traj.states.size(), traj.actions.size()));
  if (steps == 0) throw ConfigError("variance_proxy: empty trajectory");
  const int n = static_cast<int>(traj.states[0].size());
  const int m = static_cast<int>(traj.actions[0].size());
  std::vector<double> g = returns_to_go(traj);
  MatrixXd sx = MatrixXd::Zero(n, n);
  for (int k = 0; k < steps; ++k) {
    VectorXd x = transformed_state(traj.states[k], variant);
    sx.noalias() += g[k] * g[k] * x * x.transpose();
  }
  sx /= pol.sigma_a * pol.sigma_a;
  VarianceProxy proxy;
  proxy.sigma_hat = kron_with_identity(sx, m);
  proxy.lambda_max = lambda_max(proxy.sigma_hat);
  return proxy;
}

Whitening fit_whitener(const Dataset& ds) {
  if (ds.size() < 2) throw ConfigError("fit_whitener: need at least 2 trajectories");
  const int n = ds.system.n();
  long count = 0;
  VectorXd mean = VectorXd::Zero(n);
  for (const Trajectory& traj : ds.trajectories) {
    int steps = static_cast<int>(std::min(traj.states.size(), traj.actions.size()));
    for (int k = 0; k < steps; ++k) {
      mean += traj.states[k];
      ++count;
    }
  }
  if (count == 0) throw ConfigError("fit_whitener: no states");
  mean /= static_cast<double>(count);
  MatrixXd cov = MatrixXd::Zero(n, n);
  for (const Trajectory& traj : ds.trajectories) {
    int steps = static_cast<int>(std::min(traj.states.size(), traj.actions.size()));
    for (int k = 0; k < steps; ++k) {
      VectorXd c = traj.states[k] - mean;
      cov.noalias() += c * c.transpose();
    }
  }
  cov /= static_cast<double>(count);
  double ridge = 1e-6 * cov.trace() / n + 1e-12;
  Whitening w;
  w.mean = mean;
  w.transform = inverse_sqrt_psd(cov, ridge);
  return w;
}

MatrixXd fisher_matrix(const Dataset& ds, std::span<const int> ids, const PolicySpec& pol) {
  if (ids.empty()) throw NumericError("fisher_matrix: empty coalition");
  const int n = ds.system.n();
  const int m = ds.system.m();
  MatrixXd mean_sx = MatrixXd::Zero(n, n);
  for (int id : ids) mean_sx += state_cov(ds.trajectories.at(id));
  mean_sx /= static_cast<double>(ids.size()) * pol.sigma_a * pol.sigma_a;
  return kron_with_identity(mean_sx, m);
}

void CharFnConfig::validate(const SystemSpec& sys) const {
  if (T < 0) throw ConfigError("charfn: T must be >= 0");
  if (!(eta >= 0.0)) throw ConfigError("charfn: eta must be >= 0");
  if (grad_clip < 0.0) throw ConfigError("charfn: grad_clip must be >= 0");
  if (gain_clip_hi < gain_clip_lo) throw ConfigError("charfn: gain clip interval is empty");
  if (n_eval_rollouts < 1) throw ConfigError("charfn: n_eval_rollouts must be >= 1");
  if (proxy_fraction < 0.0 || proxy_fraction > 1.0)
    throw ConfigError("charfn: proxy_fraction must be in [0, 1]");
  if (K0.rows() != sys.m() || K0.cols() != sys.n())
    throw ConfigError("charfn: K0 must be m x n");
  if (adam.beta1 < 0.0 || adam.beta1 >= 1.0 || adam.beta2 < 0.0 || adam.beta2 >= 1.0 ||
      adam.eps <= 0.0)
    throw ConfigError("charfn: invalid Adam parameters");
}

std::uint64_t coalition_key(const Dataset& ds, std::span<const int> ids) {
  std::vector<std::uint64_t> seeds;
  seeds.reserve(ids.size());
  for (int id : ids) seeds.push_back(ds.trajectories.at(id).seed);
  std::sort(seeds.begin(), seeds.end());
  std::uint64_t h = 0x636f616cull;
  for (std::uint64_t s : seeds) h = splitmix64(h ^ s);
  return h;
}

namespace {

struct AdamState {
  MatrixXd m, v;
  int t = 0;
  explicit AdamState(const MatrixXd& shape)
      : m(MatrixXd::Zero(shape.rows(), shape.cols())),
        v(MatrixXd::Zero(shape.rows(), shape.cols())) {}

  MatrixXd step(const MatrixXd& grad, const AdamParams& p, double eta) {
    ++t;
    m = p.beta1 * m + (1.0 - p.beta1) * grad;
    v = p.beta2 * v + (1.0 - p.beta2) * grad.cwiseProduct(grad);
    double bc1 = 1.0 - std::pow(p.beta1, t);
    double bc2 = 1.0 - std::pow(p.beta2, t);
    MatrixXd mhat = m / bc1;
    MatrixXd vhat = v / bc2;
    MatrixXd denom = vhat.cwiseSqrt() + MatrixXd::Constant(vhat.rows(), vhat.cols(), p.eps);
    return -eta * mhat.cwiseQuotient(denom);
  }
};

}  // namespace

TrainResult train(const Dataset& ds, std::span<const int> ids, const CharFnConfig& cfg,
                  const AgentVariant& variant, bool record_trace) {
  if (ids.empty()) throw NumericError("train: empty coalition");
  cfg.validate(ds.system);
  variant.validate(ds.system.n());

  MatrixXd fisher;
  if (variant.kind == AgentKind::natural_gradient)
    fisher = fisher_matrix(ds, ids, ds.policy);

  TrainResult result;
  result.gain = cfg.K0;
  AdamState adam(cfg.K0);
  std::uint64_t ckey = coalition_key(ds, ids);
  Rng pick(mix_seed({cfg.base_seed, ckey, kTagPick}));

  // members ordered by content so interchangeable trajectories sample
  // identically regardless of their ids
  std::vector<int> members(ids.begin(), ids.end());
  std::sort(members.begin(), members.end(), [&](int a, int b) {
    const Trajectory& ta = ds.trajectories.at(a);
    const Trajectory& tb = ds.trajectories.at(b);
    if (ta.seed != tb.seed) return ta.seed < tb.seed;
    return a < b;
  });

  for (int t = 1; t <= cfg.T; ++t) {
    const Trajectory& member =
        ds.trajectories.at(members[pick.uniform_int(static_cast<int>(members.size()))]);
    RolloutConfig rc = ds.generation;
    // the member's stored seed reproduces its scenario (initial state,
    // dither, noise draws) under the current gain, so each stored
    // trajectory keeps its statistical character across re-rolls
    rc.seed = member.seed;
    PolicySpec current{result.gain, ds.policy.sigma_a};
    Trajectory fresh = rollout_truncated(ds.system, current, rc);
    if (fresh.diverged()) ++result.n_capped_rollouts;

    MatrixXd g = raw_grad_transformed(fresh, current, variant);
    if (variant.kind == AgentKind::natural_gradient)
      g = precondition_by_fisher(g, fisher, variant.fisher_damping_rel);
    // descend the cost: the estimator ascends return, so negate
    MatrixXd loss_grad = clip_elementwise(-g, cfg.grad_clip);
    result.gain += adam.step(loss_grad, cfg.adam, cfg.eta);
    result.gain = clip_gain(result.gain, cfg.gain_clip_lo, cfg.gain_clip_hi);

    if (record_trace) {
      TrainTraceRow row;
      row.step = t;
      row.gain = result.gain;
      CostEstimate est =
          estimate_cost(ds.system, PolicySpec{result.gain, ds.policy.sigma_a}, cfg.eval_rollout,
                        cfg.n_eval_rollouts, mix_seed({cfg.base_seed, kTagTrace}));
      row.j_estimate = est.mean;
      result.trace.push_back(std::move(row));
    }
  }
  return result;
}

namespace {

double evaluate_gain(const Dataset& ds, const MatrixXd& gain, const CharFnConfig& cfg,
                     std::uint64_t eval_seed, CharFnStats* stats) {
  CostEstimate est = estimate_cost(ds.system, PolicySpec{gain, ds.policy.sigma_a},
                                   cfg.eval_rollout, cfg.n_eval_rollouts, eval_seed);
  if (stats) {
    stats->n_capped_rollouts += est.n_capped;
    if (est.n_capped > 0) stats->capped = true;
  }
  return -est.mean;
}

}  // namespace

double char_fn_at(const Dataset& ds, std::span<const int> ids, const CharFnConfig& cfg,
                  const AgentVariant& variant, std::uint64_t eval_seed, Fidelity fidelity,
                  CharFnStats* stats) {
  cfg.validate(ds.system);
  if (ids.empty()) return evaluate_gain(ds, cfg.K0, cfg, eval_seed, stats);
  if (fidelity == Fidelity::proxy) {
    GradEstimate g = coalition_grad(ds, ids, ds.policy, variant);
    MatrixXd loss_grad = clip_elementwise(-g.grad, cfg.grad_clip);
    MatrixXd stepped = cfg.K0 - cfg.eta * loss_grad;
    stepped = clip_gain(stepped, cfg.gain_clip_lo, cfg.gain_clip_hi);
    return evaluate_gain(ds, stepped, cfg, eval_seed, stats);
  }
  TrainResult trained = train(ds, ids, cfg, variant);
  if (stats) stats->n_capped_rollouts += trained.n_capped_rollouts;
  return evaluate_gain(ds, trained.gain, cfg, eval_seed, stats);
}

double char_fn(const Dataset& ds, std::span<const int> ids, const CharFnConfig& cfg,
               const AgentVariant& variant, std::uint64_t eval_seed, CharFnStats* stats) {
  if (ids.empty()) return char_fn_at(ds, ids, cfg, variant, eval_seed, Fidelity::full, stats);
  Rng coin(mix_seed({eval_seed, coalition_key(ds, ids), kTagFidelity}));
  Fidelity fid = coin.uniform() < cfg.proxy_fraction ? Fidelity::proxy : Fidelity::full;
  return char_fn_at(ds, ids, cfg, variant, eval_seed, fid, stats);
}

CoalitionEvaluator::CoalitionEvaluator(const Dataset& ds, const CharFnConfig& cfg,
                                       const AgentVariant& variant, std::uint64_t eval_seed)
    : ds_(ds), cfg_(cfg), variant_(variant), eval_seed_(eval_seed) {
  cfg_.validate(ds.system);
  variant_.validate(ds.system.n());
  cached_grads_.reserve(ds.size());
  cached_state_cov_.reserve(ds.size());
  for (const Trajectory& traj : ds.trajectories) {
    cached_grads_.push_back(raw_grad_transformed(traj, ds.policy, variant_));
    cached_state_cov_.push_back(state_cov(traj));
  }
  CharFnStats stats;
  v_empty_ = evaluate_gain(ds_, cfg_.K0, cfg_, eval_seed_, &stats);
  capped_rollouts_ += stats.n_capped_rollouts;
}

std::uint64_t CoalitionEvaluator::key(std::span<const int> ids) const {
  return coalition_key(ds_, ids);
}

double CoalitionEvaluator::value(std::span<const int> ids, Fidelity fidelity) const {
  if (ids.empty()) return v_empty_;
  CharFnStats stats;
  double v;
  if (fidelity == Fidelity::proxy) {
    MatrixXd g = MatrixXd::Zero(ds_.system.m(), ds_.system.n());
    for (int id : ids) g += cached_grads_.at(id);
    g /= static_cast<double>(ids.size());
    if (variant_.kind == AgentKind::natural_gradient) {
      MatrixXd mean_sx = MatrixXd::Zero(ds_.system.n(), ds_.system.n());
      for (int id : ids) mean_sx += cached_state_cov_.at(id);
      mean_sx /= static_cast<double>(ids.size()) * ds_.policy.sigma_a * ds_.policy.sigma_a;
      g = precondition_by_fisher(g, kron_with_identity(mean_sx, ds_.system.m()),
                                 variant_.fisher_damping_rel);
    }
    MatrixXd stepped = cfg_.K0 - cfg_.eta * clip_elementwise(-g, cfg_.grad_clip);
    stepped = clip_gain(stepped, cfg_.gain_clip_lo, cfg_.gain_clip_hi);
    v = evaluate_gain(ds_, stepped, cfg_, eval_seed_, &stats);
  } else {
    TrainResult trained = train(ds_, ids, cfg_, variant_);
    stats.n_capped_rollouts += trained.n_capped_rollouts;
    v = evaluate_gain(ds_, trained.gain, cfg_, eval_seed_, &stats);
  }
  capped_rollouts_ += stats.n_capped_rollouts;
  if (stats.capped) ++capped_evaluations_;
  return v;
}

}  // namespace tvlab
