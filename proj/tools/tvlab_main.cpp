// tvlab command line: thin shell over the shared library's C API.

#include <cstdio>
#include <cstdlib>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "tvlab/tvlab.h"

namespace {

struct SessionDeleter {
  void operator()(tvl_session* s) const { tvl_session_free(s); }
};
using SessionPtr = std::unique_ptr<tvl_session, SessionDeleter>;

int run_stage(tvl_session* session, const char* stage, bool print_dir) {
  tvl_status status = tvl_run_stage(session, stage);
  if (status != TVL_OK) {
    std::fprintf(stderr, "tvlab: %s\n", tvl_last_error(session));
    return static_cast<int>(status);
  }
  if (print_dir) std::printf("run directory: %s\n", tvl_run_dir(session));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trajectory valuation laboratory for policy-gradient LQR"};
  app.set_version_flag("--version", std::string(tvl_version()));
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string variant;
  std::string seed;
  int workers = -1;
  bool paper_scale = false;

  app.add_option("--config", config_path, "run configuration file (.toml or .json)");
  app.add_option("--out", out_dir, "run directory (default: <output_dir>/<timestamp>-<hash>)");
  app.add_option("--seed", seed, "global seed (u64)");
  app.add_option("--workers", workers, "worker pool width (0 = hardware; env TVL_WORKERS)");
  app.add_flag("--paper-scale", paper_scale, "full-scale experiment settings");
  app.add_option("--variant", variant, "agent variant: vanilla | whitened | npg")
      ->check(CLI::IsMember({"vanilla", "whitened", "npg"}));

  const char* stages[] = {"generate", "metrics", "value",         "analyze",
                          "curate",   "saddle",  "reproduce-paper"};
  const char* descriptions[] = {
      "draw the trajectory dataset",
      "emit per-trajectory information metrics (CSV)",
      "Shapley + LOO valuation for the configured variants",
      "mechanism correlations with bootstrap CIs",
      "pruning / subset curation table",
      "saddle-escape probability sweep",
      "full pipeline (resumes from existing artifacts)"};
  for (std::size_t i = 0; i < std::size(stages); ++i)
    app.add_subcommand(stages[i], descriptions[i])->fallthrough();

  CLI11_PARSE(app, argc, argv);

  tvl_session* raw = nullptr;
  if (tvl_session_new(&raw) != TVL_OK) {
    std::fprintf(stderr, "tvlab: failed to create session\n");
    return static_cast<int>(TVL_ERR_INTERNAL);
  }
  SessionPtr session(raw);

  auto apply = [&](const char* key, const std::string& value) -> int {
    tvl_status status = tvl_set_option(session.get(), key, value.c_str());
    if (status != TVL_OK) {
      std::fprintf(stderr, "tvlab: %s\n", tvl_last_error(session.get()));
      return static_cast<int>(status);
    }
    return 0;
  };

  if (!config_path.empty()) {
    tvl_status status = tvl_load_config(session.get(), config_path.c_str());
    if (status != TVL_OK) {
      std::fprintf(stderr, "tvlab: %s\n", tvl_last_error(session.get()));
      return static_cast<int>(status);
    }
  }
  if (paper_scale)
    if (int rc = apply("paper_scale", "true")) return rc;
  if (!seed.empty())
    if (int rc = apply("seed", seed)) return rc;
  if (workers >= 0) {
    if (int rc = apply("workers", std::to_string(workers))) return rc;
  } else if (const char* env = std::getenv("TVL_WORKERS")) {
    if (int rc = apply("workers", env)) return rc;
  }
  if (!variant.empty())
    if (int rc = apply("variant", variant)) return rc;
  if (!out_dir.empty())
    if (int rc = apply("out", out_dir)) return rc;

  for (const char* stage : stages) {
    if (app.get_subcommand(stage)->parsed())
      return run_stage(session.get(), stage, /*print_dir=*/true);
  }
  std::fprintf(stderr, "tvlab: no subcommand\n");
  return static_cast<int>(TVL_ERR_CONFIG);
}
