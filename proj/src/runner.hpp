#pragma once

#include <filesystem>
#include <string>

#include "config.hpp"
#include "dataset_io.hpp"

namespace tvlab {

inline constexpr const char* kSoftwareVersion = "0.1.0";

// Staged pipeline over one run directory.  Every stage writes its
// artifacts plus an updated manifest; downstream stages refuse stale
// inputs (hash mismatch against the manifest).
class Runner {
 public:
  // When out_override is empty the run directory is
  // <config.output_dir>/<UTC timestamp>-<config hash>.
  Runner(RunConfig cfg, std::string out_override = "");

  void generate();
  void metrics();
  void value(AgentKind kind);
  void analyze();
  void curate(AgentKind kind);
  void saddle();

  // generate -> metrics -> value(vanilla) -> value(whitened) -> analyze ->
  // curate(vanilla) -> saddle, skipping stages whose artifacts already
  // exist and hash-match (partial-run resume).
  void reproduce_paper();

  const std::filesystem::path& dir() const { return dir_; }
  const RunConfig& config() const { return cfg_; }

  std::uint64_t stage_seed(const std::string& stage) const;

 private:
  nlohmann::json load_manifest() const;
  void save_manifest(const nlohmann::json& manifest) const;
  void record_artifacts(const std::string& stage, const std::vector<std::string>& names,
                        double seconds);
  void verify_input(const std::string& name) const;
  bool artifact_fresh(const std::string& name) const;
  Dataset load_dataset_checked() const;
  ValuationReport load_valuation_checked(AgentKind kind) const;

  RunConfig cfg_;
  std::string hash_;
  std::filesystem::path dir_;
  int workers_ = 1;
};

}  // namespace tvlab
