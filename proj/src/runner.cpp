#include "runner.hpp"

#include <chrono>
#include <ctime>
#include <numeric>

#include "errors.hpp"
#include "rng.hpp"
#include "worker_pool.hpp"

namespace tvlab {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string utc_timestamp() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", &tm);
  return std::string(buf);
}

std::string file_hash_hex(const fs::path& path) {
  std::string bytes = read_text_file(path.string());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes.data(), bytes.size())));
  return std::string(buf);
}

std::string valuation_name(AgentKind kind) {
  return "valuation_" + to_string(kind) + ".json";
}

class StageTimer {
 public:
  StageTimer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace

Runner::Runner(RunConfig cfg, std::string out_override) : cfg_(std::move(cfg)) {
  cfg_.validate();
  hash_ = config_hash(cfg_);
  workers_ = resolve_workers(cfg_.workers);
  if (!out_override.empty()) {
    dir_ = out_override;
  } else {
    dir_ = fs::path(cfg_.output_dir) / (utc_timestamp() + "-" + hash_);
  }
  fs::create_directories(dir_);

  fs::path manifest_path = dir_ / "manifest.json";
  if (fs::exists(manifest_path)) {
    json manifest = json::parse(read_text_file(manifest_path.string()));
    std::string existing = manifest.value("config_hash", "");
    if (existing != hash_)
      throw IntegrityError("run directory belongs to a different config (hash " + existing +
                           " != " + hash_ + ")");
  } else {
    json manifest;
    manifest["config_hash"] = hash_;
    manifest["software_version"] = kSoftwareVersion;
    manifest["config"] = config_to_json(cfg_);
    manifest["artifacts"] = json::object();
    manifest["stage_seconds"] = json::object();
    manifest["derived_seeds"] = {
        {"dataset", stage_seed("dataset")},   {"valuation", stage_seed("valuation")},
        {"eval", stage_seed("eval")},         {"train", stage_seed("train")},
        {"analysis", stage_seed("analysis")}, {"curation", stage_seed("curation")},
        {"saddle", stage_seed("saddle")}};
    manifest["created_at"] = utc_timestamp();
    save_manifest(manifest);
  }
}

std::uint64_t Runner::stage_seed(const std::string& stage) const {
  return mix_seed({cfg_.seed, fnv1a64(stage)});
}

json Runner::load_manifest() const {
  return json::parse(read_text_file((dir_ / "manifest.json").string()));
}

void Runner::save_manifest(const json& manifest) const {
  write_text_file((dir_ / "manifest.json").string(), manifest.dump(2) + "\n");
}

void Runner::record_artifacts(const std::string& stage, const std::vector<std::string>& names,
                              double seconds) {
  json manifest = load_manifest();
  for (const std::string& name : names) {
    manifest["artifacts"][name] = {{"fnv64", file_hash_hex(dir_ / name)}, {"stage", stage}};
  }
  manifest["stage_seconds"][stage] = seconds;
  save_manifest(manifest);
}

void Runner::verify_input(const std::string& name) const {
  fs::path path = dir_ / name;
  if (!fs::exists(path))
    throw IntegrityError("missing input artifact: " + name + " (run its stage first)");
  json manifest = load_manifest();
  if (!manifest["artifacts"].contains(name))
    throw IntegrityError("input artifact not recorded in the manifest: " + name);
  std::string expected = manifest["artifacts"][name]["fnv64"].get<std::string>();
  std::string actual = file_hash_hex(path);
  if (expected != actual)
    throw IntegrityError("stale input: " + name + " hash " + actual +
                         " does not match the manifest (" + expected +
                         "); regenerate upstream artifacts");
}

bool Runner::artifact_fresh(const std::string& name) const {
  fs::path path = dir_ / name;
  if (!fs::exists(path)) return false;
  json manifest = load_manifest();
  if (!manifest["artifacts"].contains(name)) return false;
  return manifest["artifacts"][name]["fnv64"].get<std::string>() == file_hash_hex(path);
}

Dataset Runner::load_dataset_checked() const {
  verify_input("dataset.json");
  json j = json::parse(read_text_file((dir_ / "dataset.json").string()));
  return dataset_from_json(j, cfg_.dataset.generation);
}

ValuationReport Runner::load_valuation_checked(AgentKind kind) const {
  verify_input(valuation_name(kind));
  json j = json::parse(read_text_file((dir_ / valuation_name(kind)).string()));
  return valuation_from_json(j);
}

void Runner::generate() {
  StageTimer timer;
  Dataset ds = generate_dataset(cfg_.system, cfg_.policy, cfg_.dataset.generation,
                                cfg_.dataset.N, stage_seed("dataset"));
  write_text_file((dir_ / "dataset.json").string(), dataset_to_json(ds).dump(2) + "\n");
  write_text_file((dir_ / "dataset.csv").string(), dataset_to_csv(ds));
  record_artifacts("generate", {"dataset.json", "dataset.csv"}, timer.seconds());
}

void Runner::metrics() {
  StageTimer timer;
  Dataset ds = load_dataset_checked();
  std::vector<InfoSummary> summaries = summarize_dataset(ds);
  std::vector<int> deciles = energy_deciles(ds.trajectories);
  write_text_file((dir_ / "metrics.csv").string(), metrics_to_csv(ds, summaries, deciles));
  record_artifacts("metrics", {"metrics.csv"}, timer.seconds());
}

void Runner::value(AgentKind kind) {
  StageTimer timer;
  Dataset ds = load_dataset_checked();
  const int n = ds.size();

  CharFnConfig charfn = cfg_.charfn;
  charfn.base_seed = stage_seed("train");
  AgentVariant variant = make_variant(kind, ds);
  std::uint64_t eval_seed = stage_seed("eval");
  CoalitionEvaluator evaluator(ds, charfn, variant, eval_seed);
  CoalitionValueFn fn = [&](std::span<const int> ids, Fidelity fid) {
    return evaluator.value(ids, fid);
  };

  McOptions opt;
  opt.permutations = cfg_.valuation.M;
  opt.seed = stage_seed("valuation");
  opt.proxy_fraction = charfn.proxy_fraction;
  opt.antithetic = cfg_.valuation.antithetic;
  opt.workers = workers_;
  opt.content_keys.reserve(n);
  for (const Trajectory& t : ds.trajectories) opt.content_keys.push_back(t.seed);

  ValuationReport report = shapley_mc(n, fn, opt);
  std::vector<double> loo = loo_scores(n, fn);
  for (int i = 0; i < n; ++i) report.per_trajectory[i].loo = loo[i];
  report.truncation.n_evaluations += n + 1;
  report.truncation.n_capped_rollouts = evaluator.n_capped_rollouts();
  report.truncation.n_capped_evaluations = evaluator.n_capped_evaluations();

  std::vector<InfoSummary> summaries = summarize_dataset(ds);
  std::vector<double> grad_var(n);
  std::vector<double> shapley(n);
  for (int i = 0; i < n; ++i) {
    grad_var[i] = variance_proxy(ds.trajectories[i], ds.policy, variant).lambda_max;
    shapley[i] = report.per_trajectory[i].shapley;
  }

  std::string tag = to_string(kind);
  write_text_file((dir_ / valuation_name(kind)).string(),
                  valuation_to_json(report, tag).dump(2) + "\n");
  write_text_file((dir_ / ("valuation_" + tag + ".csv")).string(),
                  valuation_to_csv(report, summaries, grad_var));
  write_text_file((dir_ / ("fig2_" + tag + ".csv")).string(),
                  scatter_to_csv(summaries, grad_var, shapley));

  // grand-coalition training curve, exported for inspection
  std::vector<int> grand(n);
  std::iota(grand.begin(), grand.end(), 0);
  TrainResult trace_run = train(ds, grand, charfn, variant, /*record_trace=*/true);
  write_text_file((dir_ / ("training_trace_" + tag + ".csv")).string(),
                  train_trace_to_csv(trace_run.trace));

  record_artifacts("value_" + tag,
                   {valuation_name(kind), "valuation_" + tag + ".csv", "fig2_" + tag + ".csv",
                    "training_trace_" + tag + ".csv"},
                   timer.seconds());
}

void Runner::analyze() {
  StageTimer timer;
  Dataset ds = load_dataset_checked();
  const int n = ds.size();
  std::vector<InfoSummary> summaries = summarize_dataset(ds);
  std::vector<int> bins = energy_quantile_bins(ds.trajectories, analysis_bin_count(n));

  std::map<std::string, MechanismInputs> inputs;
  for (AgentKind kind : cfg_.variants) {
    ValuationReport report = load_valuation_checked(kind);
    if (static_cast<int>(report.per_trajectory.size()) != n)
      throw IntegrityError("valuation does not match the dataset size");
    AgentVariant variant = make_variant(kind, ds);
    MechanismInputs in;
    in.pe.resize(n);
    in.grad_var.resize(n);
    in.shapley.resize(n);
    in.bins = bins;
    for (int i = 0; i < n; ++i) {
      in.pe[i] = summaries[i].pe;
      in.grad_var[i] = variance_proxy(ds.trajectories[i], ds.policy, variant).lambda_max;
      in.shapley[report.per_trajectory[i].id] = report.per_trajectory[i].shapley;
    }
    inputs[to_string(kind)] = std::move(in);
  }

  MechanismReport report = mechanism_report(inputs, cfg_.analysis.n_boot,
                                            stage_seed("analysis"), cfg_.analysis.conditioning);
  write_text_file((dir_ / "mechanism.json").string(), mechanism_to_json(report).dump(2) + "\n");
  write_text_file((dir_ / "mechanism.csv").string(), mechanism_to_csv(report));
  record_artifacts("analyze", {"mechanism.json", "mechanism.csv"}, timer.seconds());
}

void Runner::curate(AgentKind kind) {
  StageTimer timer;
  Dataset ds = load_dataset_checked();
  ValuationReport valuation = load_valuation_checked(kind);
  CharFnConfig charfn = cfg_.charfn;
  AgentVariant variant = make_variant(kind, ds);
  std::vector<CurationRow> rows = run_curation(ds, valuation, charfn, variant, cfg_.curation,
                                               stage_seed("curation"), workers_);
  write_text_file((dir_ / "curation.csv").string(), curation_to_csv(rows));
  write_text_file((dir_ / "curation.json").string(),
                  curation_to_json(rows, to_string(kind)).dump(2) + "\n");
  record_artifacts("curate", {"curation.csv", "curation.json"}, timer.seconds());
}

void Runner::saddle() {
  StageTimer timer;
  SweepResult sweep = monotonicity_sweep(cfg_.saddle.problem, cfg_.saddle.sigma2_grid,
                                         cfg_.saddle.n_paths, stage_seed("saddle"), workers_);
  write_text_file((dir_ / "saddle.csv").string(), saddle_to_csv(sweep));
  write_text_file((dir_ / "saddle.json").string(), saddle_to_json(sweep).dump(2) + "\n");
  record_artifacts("saddle", {"saddle.csv", "saddle.json"}, timer.seconds());
}

void Runner::reproduce_paper() {
  if (!artifact_fresh("dataset.json")) generate();
  if (!artifact_fresh("metrics.csv")) metrics();
  for (AgentKind kind : cfg_.variants) {
    if (!artifact_fresh(valuation_name(kind))) value(kind);
  }
  if (!artifact_fresh("mechanism.json")) analyze();
  if (!artifact_fresh("curation.csv")) curate(cfg_.variants.front());
  if (!artifact_fresh("saddle.csv")) saddle();
}

}  // namespace tvlab
