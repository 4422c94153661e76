#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tvlab {

// Spearman rank correlation with midranks for ties.  Throws NumericError
// when either side has zero rank variance.
double spearman(std::span<const double> x, std::span<const double> y);

// Within-bin Spearman averaged over bins, weighted by bin size; bins with
// fewer than 3 members (or degenerate ties) are skipped.  Throws when no
// bin qualifies.
double conditioned_spearman(std::span<const double> x, std::span<const double> y,
                            std::span<const int> bins);

struct CiEstimate {
  double point = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  int n_skipped = 0;  // degenerate resamples
};

// Percentile bootstrap (2.5 / 97.5) over item resamples.  The statistic
// receives resampled item indices; resamples where it throws NumericError
// are skipped and counted.
CiEstimate bootstrap_ci(int n_items,
                        const std::function<double(std::span<const int>)>& statistic,
                        int n_boot, std::uint64_t seed);

enum class Conditioning { pooled, within_decile_mean };

std::string to_string(Conditioning c);
Conditioning conditioning_from_string(const std::string& name);

struct MechanismInputs {
  std::vector<double> pe;
  std::vector<double> grad_var;  // lambda_max of the variance proxy under the variant
  std::vector<double> shapley;
  std::vector<int> bins;         // energy-quantile bin per trajectory
};

struct CorrelationEstimate {
  CiEstimate pooled;
  CiEstimate conditioned;
};

struct VariantMechanism {
  std::string variant;
  CorrelationEstimate pe_var;
  CorrelationEstimate var_phi;
  CorrelationEstimate pe_phi;
};

struct MechanismReport {
  std::vector<VariantMechanism> variants;
  int n_boot = 0;
  Conditioning conditioning = Conditioning::within_decile_mean;
  // conditioned r_pe_phi(whitened) - r_pe_phi(vanilla), paired resamples
  std::optional<CiEstimate> flip_pe_phi;
};

// Inputs keyed by variant name; all vectors must be aligned to the same
// trajectory order.
MechanismReport mechanism_report(const std::map<std::string, MechanismInputs>& inputs,
                                 int n_boot, std::uint64_t seed, Conditioning conditioning);

}  // namespace tvlab
