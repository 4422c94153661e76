#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "curation.hpp"
#include "mechanism.hpp"
#include "policy_gradient.hpp"
#include "saddle.hpp"

namespace tvlab {

struct DatasetConfig {
  int N = 20;
  RolloutConfig generation;
};

struct ValuationConfig {
  int M = 400;
  bool antithetic = false;
};

struct AnalysisConfig {
  int n_boot = 1000;
  Conditioning conditioning = Conditioning::within_decile_mean;
};

struct SaddleConfig {
  SaddleProblem problem;
  std::vector<double> sigma2_grid{0.05, 0.1, 0.2, 0.4, 0.8};
  long n_paths = 10000;
};

struct RunConfig {
  SystemSpec system;
  PolicySpec policy;
  DatasetConfig dataset;
  CharFnConfig charfn;
  ValuationConfig valuation;
  AnalysisConfig analysis;
  CurationConfig curation;
  SaddleConfig saddle;
  std::vector<AgentKind> variants{AgentKind::vanilla, AgentKind::whitened};
  std::string output_dir = "runs";
  std::uint64_t seed = 42;
  int workers = 0;  // 0 = hardware concurrency
  bool paper_scale = false;

  void validate() const;
};

// Desk-scale defaults (N=20, M=400, H=50, T=25); runs in seconds and
// preserves the qualitative behaviour of the full-scale experiment.
RunConfig default_run_config();

// Full-scale settings: H=100, sigma_a=0.5, lr=1e-4, M=2500, T=50, N=50,
// 50 evaluation rollouts, 80% proxy share.
void apply_paper_scale(RunConfig& cfg);

RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& cfg);

// Accepts .toml or .json (by extension; falls back to trying both).
RunConfig load_config_file(const std::string& path);

// FNV-1a of the canonical JSON echo; stable across re-serialization.
std::string config_hash(const RunConfig& cfg);

// Analysis bins: energy deciles at N >= 50, proportionally fewer bins for
// smaller datasets so every bin can hold >= 3 members.
int analysis_bin_count(int dataset_size);

}  // namespace tvlab
