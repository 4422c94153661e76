#pragma once

#include <vector>

#include "lqr.hpp"

namespace tvlab {

struct InfoSummary {
  MatrixXd info_matrix;  // (n+m) x (n+m), sum of z_k z_k'
  MatrixXd state_cov;    // n x n, upper-left block
  double pe = 0.0;       // lambda_min(info_matrix), clamped at 0
  double energy = 0.0;   // trace(info_matrix)
  double lambda_max_info = 0.0;
  double lambda_max_state = 0.0;
};

MatrixXd info_matrix(const Trajectory& traj);
double pe(const Trajectory& traj);
double energy(const Trajectory& traj);
MatrixXd state_cov(const Trajectory& traj);
InfoSummary summarize(const Trajectory& traj);

// Spectral chain behind the variance bound:
//   lambda_max(S_x) <= lambda_max(I_tau) <= E - (n+m-1) PE,
// checked with tolerance 1e-9 * E.
struct SpectralCheck {
  double lambda_max_state = 0.0;
  double lambda_max_info = 0.0;
  double budget = 0.0;  // E - (n+m-1) PE
  bool holds = false;
};
SpectralCheck check_spectral_chain(const Trajectory& traj);

// Contiguous equal-size-(+/-1) bins in sorted-(energy, id) order.
// energy_deciles uses min(10, N) bins.
std::vector<int> energy_quantile_bins(const std::vector<Trajectory>& dataset, int n_bins);
std::vector<int> energy_deciles(const std::vector<Trajectory>& dataset);

std::vector<InfoSummary> summarize_dataset(const Dataset& ds);

}  // namespace tvlab
