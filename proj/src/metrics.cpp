#include "metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "errors.hpp"

namespace tvlab {

namespace {

// steps usable for z_k = [x_k; u_k]
int info_steps(const Trajectory& traj) {
  return static_cast<int>(std::min(traj.states.size(), traj.actions.size()));
}

}  // namespace

MatrixXd info_matrix(const Trajectory& traj) {
  const int steps = info_steps(traj);
  if (steps == 0) throw ConfigError("info_matrix: empty trajectory");
  const int n = static_cast<int>(traj.states[0].size());
  const int m = static_cast<int>(traj.actions[0].size());
  const int d = n + m;
  MatrixXd info = MatrixXd::Zero(d, d);
  VectorXd z(d);
  for (int k = 0; k < steps; ++k) {
    z.head(n) = traj.states[k];
    z.tail(m) = traj.actions[k];
    info.noalias() += z * z.transpose();
  }
  return info;
}

double pe(const Trajectory& traj) { return summarize(traj).pe; }

double energy(const Trajectory& traj) {
  const int steps = info_steps(traj);
  if (steps == 0) throw ConfigError("energy: empty trajectory");
  double e = 0.0;
  for (int k = 0; k < steps; ++k)
    e += traj.states[k].squaredNorm() + traj.actions[k].squaredNorm();
  return e;
}

MatrixXd state_cov(const Trajectory& traj) {
  const int steps = info_steps(traj);
  if (steps == 0) throw ConfigError("state_cov: empty trajectory");
  const int n = static_cast<int>(traj.states[0].size());
  MatrixXd s = MatrixXd::Zero(n, n);
  for (int k = 0; k < steps; ++k) s.noalias() += traj.states[k] * traj.states[k].transpose();
  return s;
}

InfoSummary summarize(const Trajectory& traj) {
  InfoSummary out;
  out.info_matrix = info_matrix(traj);
  const int n = static_cast<int>(traj.states[0].size());
  out.state_cov = out.info_matrix.topLeftCorner(n, n);
  out.energy = out.info_matrix.trace();
  VectorXd ev = sym_eigenvalues(out.info_matrix);
  double lo = ev(0);
  // PSD by construction; clamp eigensolver noise
  out.pe = lo < 0.0 && lo > -1e-12 * std::max(out.energy, 1.0) ? 0.0 : std::max(lo, 0.0);
  out.lambda_max_info = ev(ev.size() - 1);
  out.lambda_max_state = lambda_max(out.state_cov);
  return out;
}

SpectralCheck check_spectral_chain(const Trajectory& traj) {
  InfoSummary s = summarize(traj);
  const int d = static_cast<int>(s.info_matrix.rows());
  SpectralCheck check;
  check.lambda_max_state = s.lambda_max_state;
  check.lambda_max_info = s.lambda_max_info;
  check.budget = s.energy - (d - 1) * s.pe;
  const double tol = 1e-9 * s.energy;
  check.holds = check.lambda_max_state <= check.lambda_max_info + tol &&
                check.lambda_max_info <= check.budget + tol;
  return check;
}

std::vector<int> energy_quantile_bins(const std::vector<Trajectory>& dataset, int n_bins) {
  const int count = static_cast<int>(dataset.size());
  if (count == 0) throw ConfigError("energy bins: empty dataset");
  n_bins = std::clamp(n_bins, 1, count);
  std::vector<double> e(count);
  for (int i = 0; i < count; ++i) e[i] = energy(dataset[i]);
  std::vector<int> order(count);
  std::iota(order.begin(), order.end(), 0);
  // ties broken by trajectory id for determinism
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (e[a] != e[b]) return e[a] < e[b];
    return dataset[a].id < dataset[b].id;
  });
  std::vector<int> bins(count, 0);
  for (int b = 0; b < n_bins; ++b) {
    int lo = b * count / n_bins;
    int hi = (b + 1) * count / n_bins;
    for (int i = lo; i < hi; ++i) bins[order[i]] = b;
  }
  return bins;
}

std::vector<int> energy_deciles(const std::vector<Trajectory>& dataset) {
  return energy_quantile_bins(dataset, 10);
}

std::vector<InfoSummary> summarize_dataset(const Dataset& ds) {
  std::vector<InfoSummary> out;
  out.reserve(ds.trajectories.size());
  for (const Trajectory& traj : ds.trajectories) out.push_back(summarize(traj));
  return out;
}

}  // namespace tvlab
