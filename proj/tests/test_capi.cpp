// Exercises the shared library's C surface: session lifecycle, options,
// stages, and the error-code contract.
#include "tvlab/tvlab.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "test_util.hpp"

namespace fs = std::filesystem;

namespace {

const char* kMicroToml = R"(
seed = 7
variants = ["vanilla"]
[system]
H = 8
[policy]
K = [[0.1, 0.45]]
[dataset]
N = 5
[charfn]
T = 2
n_eval_rollouts = 4
K0 = [[0.1, 0.45]]
[valuation]
M = 8
[analysis]
n_boot = 120
[curation]
n_seeds = 2
[saddle]
n_paths = 120
sigma2_grid = [0.1, 0.2, 0.4]
)";

std::string write_config(const std::string& name, const std::string& text) {
  fs::path path = fs::temp_directory_path() / name;
  std::ofstream out(path);
  out << text;
  return path.string();
}

void test_version_and_lifecycle() {
  REQUIRE(std::strlen(tvl_version()) > 0);
  tvl_session* s = nullptr;
  REQUIRE(tvl_session_new(&s) == TVL_OK);
  REQUIRE(std::strlen(tvl_last_error(s)) == 0);
  tvl_session_free(s);
  tvl_session_free(nullptr);  // must be harmless
  test_pass("version string and session lifecycle");
}

void test_config_errors() {
  tvl_session* s = nullptr;
  REQUIRE(tvl_session_new(&s) == TVL_OK);
  REQUIRE(tvl_load_config(s, "/nonexistent/config.toml") == TVL_ERR_CONFIG);
  REQUIRE(std::strlen(tvl_last_error(s)) > 0);

  std::string bad = write_config("tvlab_bad.toml", "H = \n");
  REQUIRE(tvl_load_config(s, bad.c_str()) == TVL_ERR_CONFIG);

  std::string invalid = write_config("tvlab_invalid.toml", "[system]\nH = 0\n");
  REQUIRE(tvl_load_config(s, invalid.c_str()) == TVL_ERR_CONFIG);

  REQUIRE(tvl_set_option(s, "bogus", "1") == TVL_ERR_CONFIG);
  REQUIRE(tvl_set_option(s, "workers", "-2") == TVL_ERR_CONFIG);
  REQUIRE(tvl_run_stage(s, "not-a-stage") == TVL_ERR_CONFIG);
  tvl_session_free(s);
  test_pass("config failures reported with code 2 and a message");
}

void test_pipeline_through_capi() {
  std::string cfg_path = write_config("tvlab_micro.toml", kMicroToml);
  fs::path dir = fs::temp_directory_path() / "tvlab_capi_run";
  fs::remove_all(dir);

  tvl_session* s = nullptr;
  REQUIRE(tvl_session_new(&s) == TVL_OK);
  REQUIRE(tvl_load_config(s, cfg_path.c_str()) == TVL_OK);
  REQUIRE(tvl_set_option(s, "out", dir.string().c_str()) == TVL_OK);
  REQUIRE(tvl_set_option(s, "workers", "2") == TVL_OK);
  REQUIRE(tvl_set_option(s, "seed", "7") == TVL_OK);

  REQUIRE(tvl_run_stage(s, "generate") == TVL_OK);
  REQUIRE(std::string(tvl_run_dir(s)) == dir.string());
  REQUIRE(tvl_run_stage(s, "metrics") == TVL_OK);
  REQUIRE(tvl_run_stage(s, "value") == TVL_OK);
  REQUIRE(tvl_run_stage(s, "analyze") == TVL_OK);
  REQUIRE(tvl_run_stage(s, "curate") == TVL_OK);
  REQUIRE(tvl_run_stage(s, "saddle") == TVL_OK);
  REQUIRE(fs::exists(dir / "mechanism.json"));
  REQUIRE(fs::exists(dir / "curation.csv"));
  REQUIRE(fs::exists(dir / "saddle.csv"));

  // integrity violation surfaces as code 3
  {
    std::ifstream in(dir / "dataset.json");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::ofstream out(dir / "dataset.json");
    out << text << " ";
  }
  REQUIRE(tvl_run_stage(s, "metrics") == TVL_ERR_INTEGRITY);
  REQUIRE(std::strlen(tvl_last_error(s)) > 0);
  tvl_session_free(s);
  test_pass("staged pipeline over the C API with integrity code 3");
}

void test_variant_override_and_reproduce() {
  std::string cfg_path = write_config("tvlab_micro2.toml", kMicroToml);
  fs::path dir = fs::temp_directory_path() / "tvlab_capi_repro";
  fs::remove_all(dir);

  tvl_session* s = nullptr;
  REQUIRE(tvl_session_new(&s) == TVL_OK);
  REQUIRE(tvl_load_config(s, cfg_path.c_str()) == TVL_OK);
  REQUIRE(tvl_set_option(s, "out", dir.string().c_str()) == TVL_OK);
  REQUIRE(tvl_set_option(s, "variant", "vanilla") == TVL_OK);
  REQUIRE(tvl_run_stage(s, "reproduce-paper") == TVL_OK);
  REQUIRE(fs::exists(dir / "valuation_vanilla.json"));
  tvl_session_free(s);
  test_pass("reproduce-paper stage runs end to end via the C API");
}

}  // namespace

int main() {
  test_version_and_lifecycle();
  test_config_errors();
  test_pipeline_through_capi();
  test_variant_override_and_reproduce();
  std::printf("test_capi: all passed\n");
  return 0;
}
