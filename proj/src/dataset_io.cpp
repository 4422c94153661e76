#include "dataset_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json_util.hpp"

namespace tvlab {

using nlohmann::json;

std::string format_full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

namespace {

json vectors_to_json(const std::vector<VectorXd>& vs) {
  json out = json::array();
  for (const VectorXd& v : vs) out.push_back(vector_to_json(v));
  return out;
}

std::vector<VectorXd> vectors_from_json(const json& j, const char* what) {
  std::vector<VectorXd> out;
  out.reserve(j.size());
  for (const json& v : j) out.push_back(vector_from_json(v, what));
  return out;
}

}  // namespace

json dataset_to_json(const Dataset& ds) {
  json j;
  j["system"] = {{"A", matrix_to_json(ds.system.A)},
                 {"B", matrix_to_json(ds.system.B)},
                 {"Q", matrix_to_json(ds.system.Q)},
                 {"R", matrix_to_json(ds.system.R)},
                 {"sigma_w", ds.system.sigma_w},
                 {"H", ds.system.H}};
  j["policy"] = {{"K", matrix_to_json(ds.policy.K)}, {"sigma_a", ds.policy.sigma_a}};
  json trajectories = json::array();
  for (const Trajectory& t : ds.trajectories) {
    json tj;
    tj["id"] = t.id;
    tj["seed"] = t.seed;
    tj["states"] = vectors_to_json(t.states);
    tj["actions"] = vectors_to_json(t.actions);
    tj["noises"] = vectors_to_json(t.noises);
    tj["rewards"] = t.rewards;
    trajectories.push_back(std::move(tj));
  }
  j["trajectories"] = std::move(trajectories);
  return j;
}

Dataset dataset_from_json(const json& j, const RolloutConfig& generation) {
  Dataset ds;
  const json& s = j.at("system");
  ds.system.A = matrix_from_json(s.at("A"), "system.A");
  ds.system.B = matrix_from_json(s.at("B"), "system.B");
  ds.system.Q = matrix_from_json(s.at("Q"), "system.Q");
  ds.system.R = matrix_from_json(s.at("R"), "system.R");
  ds.system.sigma_w = s.at("sigma_w").get<double>();
  ds.system.H = s.at("H").get<int>();
  const json& p = j.at("policy");
  ds.policy.K = matrix_from_json(p.at("K"), "policy.K");
  ds.policy.sigma_a = p.at("sigma_a").get<double>();
  ds.generation = generation;
  for (const json& tj : j.at("trajectories")) {
    Trajectory t;
    t.id = tj.at("id").get<int>();
    t.seed = tj.at("seed").get<std::uint64_t>();
    t.states = vectors_from_json(tj.at("states"), "states");
    t.actions = vectors_from_json(tj.at("actions"), "actions");
    t.noises = vectors_from_json(tj.at("noises"), "noises");
    t.rewards = tj.at("rewards").get<std::vector<double>>();
    ds.trajectories.push_back(std::move(t));
  }
  return ds;
}

json valuation_to_json(const ValuationReport& report, const std::string& variant) {
  json j;
  j["variant"] = variant;
  json per = json::array();
  for (const TrajectoryValue& tv : report.per_trajectory) {
    per.push_back({{"id", tv.id},
                   {"shapley", tv.shapley},
                   {"shapley_se", tv.shapley_se},
                   {"loo", tv.loo},
                   {"n_marginals", tv.n_marginals}});
  }
  j["per_trajectory"] = std::move(per);
  j["global"] = {{"v_grand", report.v_grand},
                 {"v_empty", report.v_empty},
                 {"n_permutations", report.n_permutations},
                 {"efficiency_target", report.efficiency_target},
                 {"efficiency_se", report.efficiency_se},
                 {"truncation_stats",
                  {{"n_evaluations", report.truncation.n_evaluations},
                   {"n_capped_evaluations", report.truncation.n_capped_evaluations},
                   {"n_capped_rollouts", report.truncation.n_capped_rollouts}}}};
  return j;
}

ValuationReport valuation_from_json(const json& j) {
  ValuationReport report;
  for (const json& tv : j.at("per_trajectory")) {
    TrajectoryValue v;
    v.id = tv.at("id").get<int>();
    v.shapley = tv.at("shapley").get<double>();
    v.shapley_se = tv.at("shapley_se").get<double>();
    v.loo = tv.at("loo").get<double>();
    v.n_marginals = tv.at("n_marginals").get<int>();
    report.per_trajectory.push_back(v);
  }
  const json& g = j.at("global");
  report.v_grand = g.at("v_grand").get<double>();
  report.v_empty = g.at("v_empty").get<double>();
  report.n_permutations = g.at("n_permutations").get<int>();
  report.efficiency_target = g.at("efficiency_target").get<double>();
  report.efficiency_se = g.at("efficiency_se").get<double>();
  const json& t = g.at("truncation_stats");
  report.truncation.n_evaluations = t.at("n_evaluations").get<long>();
  report.truncation.n_capped_evaluations = t.at("n_capped_evaluations").get<long>();
  report.truncation.n_capped_rollouts = t.at("n_capped_rollouts").get<long>();
  return report;
}

namespace {

json ci_to_json(const CiEstimate& ci) {
  return {{"point", ci.point}, {"ci_lo", ci.ci_lo}, {"ci_hi", ci.ci_hi}, {"n_skipped", ci.n_skipped}};
}

json correlation_to_json(const CorrelationEstimate& est) {
  return {{"pooled", ci_to_json(est.pooled)}, {"conditioned", ci_to_json(est.conditioned)}};
}

}  // namespace

json mechanism_to_json(const MechanismReport& report) {
  json j;
  j["n_boot"] = report.n_boot;
  j["conditioning"] = to_string(report.conditioning);
  json variants = json::object();
  for (const VariantMechanism& vm : report.variants) {
    variants[vm.variant] = {{"r_pe_var", correlation_to_json(vm.pe_var)},
                            {"r_var_phi", correlation_to_json(vm.var_phi)},
                            {"r_pe_phi", correlation_to_json(vm.pe_phi)}};
  }
  j["variants"] = std::move(variants);
  if (report.flip_pe_phi) j["flip_pe_phi"] = ci_to_json(*report.flip_pe_phi);
  return j;
}

json curation_to_json(const std::vector<CurationRow>& rows, const std::string& variant) {
  json j;
  j["variant"] = variant;
  json out = json::array();
  for (const CurationRow& row : rows) {
    out.push_back({{"task", to_string(row.task)},
                   {"method", to_string(row.method)},
                   {"final_return", row.final_return},
                   {"display_return", row.display_return},
                   {"unstable", row.unstable},
                   {"n_seeds", row.n_seeds},
                   {"return_se", row.return_se},
                   {"per_seed_returns", row.per_seed_returns},
                   {"subset_ids", row.subset_ids}});
  }
  j["rows"] = std::move(out);
  return j;
}

json saddle_to_json(const SweepResult& sweep) {
  json rows = json::array();
  for (const SweepRow& r : sweep.rows) {
    rows.push_back({{"sigma2", r.sigma2},
                    {"p_hat", r.p_hat},
                    {"se", r.se},
                    {"p_bvp", r.p_bvp},
                    {"d_p_bvp_sign", r.d_p_bvp_sign}});
  }
  return {{"rows", std::move(rows)},
          {"bvp_strictly_increasing", sweep.bvp_strictly_increasing},
          {"mc_consistent", sweep.mc_consistent}};
}

std::string dataset_to_csv(const Dataset& ds) {
  const int n = ds.system.n();
  const int m = ds.system.m();
  std::ostringstream out;
  out << "id,step";
  for (int i = 0; i < n; ++i) out << ",x" << i;
  for (int i = 0; i < m; ++i) out << ",u" << i;
  for (int i = 0; i < m; ++i) out << ",eps" << i;
  out << ",reward\n";
  for (const Trajectory& t : ds.trajectories) {
    for (int k = 0; k < t.steps(); ++k) {
      out << t.id << "," << k;
      for (int i = 0; i < n; ++i) out << "," << format_full(t.states[k](i));
      for (int i = 0; i < m; ++i) out << "," << format_full(t.actions[k](i));
      for (int i = 0; i < m; ++i) out << "," << format_full(t.noises[k](i));
      out << "," << format_full(t.rewards[k]) << "\n";
    }
  }
  return out.str();
}

std::string metrics_to_csv(const Dataset& ds, const std::vector<InfoSummary>& summaries,
                           const std::vector<int>& deciles) {
  std::ostringstream out;
  out << "id,pe,energy,lambda_max_info,lambda_max_state,decile\n";
  for (int i = 0; i < ds.size(); ++i) {
    const InfoSummary& s = summaries.at(i);
    out << ds.trajectories[i].id << "," << format_full(s.pe) << "," << format_full(s.energy)
        << "," << format_full(s.lambda_max_info) << "," << format_full(s.lambda_max_state)
        << "," << deciles.at(i) << "\n";
  }
  return out.str();
}

std::string valuation_to_csv(const ValuationReport& report,
                             const std::vector<InfoSummary>& summaries,
                             const std::vector<double>& grad_var) {
  std::ostringstream out;
  out << "id,pe,energy,grad_var,shapley,shapley_se,loo\n";
  for (std::size_t i = 0; i < report.per_trajectory.size(); ++i) {
    const TrajectoryValue& tv = report.per_trajectory[i];
    const InfoSummary& s = summaries.at(tv.id);
    out << tv.id << "," << format_full(s.pe) << "," << format_full(s.energy) << ","
        << format_full(grad_var.at(tv.id)) << "," << format_full(tv.shapley) << ","
        << format_full(tv.shapley_se) << "," << format_full(tv.loo) << "\n";
  }
  return out.str();
}

std::string mechanism_to_csv(const MechanismReport& report) {
  std::ostringstream out;
  out << "correlation,variant,conditioning,point,ci_lo,ci_hi\n";
  auto emit = [&](const char* name, const std::string& variant, const CorrelationEstimate& est) {
    out << name << "," << variant << ",pooled," << format_full(est.pooled.point) << ","
        << format_full(est.pooled.ci_lo) << "," << format_full(est.pooled.ci_hi) << "\n";
    out << name << "," << variant << ",within_decile_mean," << format_full(est.conditioned.point)
        << "," << format_full(est.conditioned.ci_lo) << "," << format_full(est.conditioned.ci_hi)
        << "\n";
  };
  for (const VariantMechanism& vm : report.variants) {
    emit("pe_var", vm.variant, vm.pe_var);
    emit("var_phi", vm.variant, vm.var_phi);
    emit("pe_phi", vm.variant, vm.pe_phi);
  }
  if (report.flip_pe_phi) {
    out << "flip_pe_phi,whitened-vanilla," << to_string(report.conditioning) << ","
        << format_full(report.flip_pe_phi->point) << "," << format_full(report.flip_pe_phi->ci_lo)
        << "," << format_full(report.flip_pe_phi->ci_hi) << "\n";
  }
  return out.str();
}

std::string curation_to_csv(const std::vector<CurationRow>& rows) {
  std::ostringstream out;
  out << "task,method,final_return,unstable,n_seeds,return_se\n";
  for (const CurationRow& row : rows) {
    out << to_string(row.task) << "," << to_string(row.method) << ","
        << format_full(row.display_return) << "," << (row.unstable ? "true" : "false") << ","
        << row.n_seeds << "," << format_full(row.return_se) << "\n";
  }
  return out.str();
}

std::string saddle_to_csv(const SweepResult& sweep) {
  std::ostringstream out;
  out << "sigma2,p_hat,se,p_bvp\n";
  for (const SweepRow& r : sweep.rows) {
    out << format_full(r.sigma2) << "," << format_full(r.p_hat) << "," << format_full(r.se)
        << "," << format_full(r.p_bvp) << "\n";
  }
  return out.str();
}

std::string scatter_to_csv(const std::vector<InfoSummary>& summaries,
                           const std::vector<double>& grad_var,
                           const std::vector<double>& shapley) {
  std::ostringstream out;
  out << "id,pe,grad_var,shapley\n";
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    out << i << "," << format_full(summaries[i].pe) << "," << format_full(grad_var.at(i)) << ","
        << format_full(shapley.at(i)) << "\n";
  }
  return out.str();
}

std::string train_trace_to_csv(const std::vector<TrainTraceRow>& trace) {
  std::ostringstream out;
  out << "step,j_estimate";
  if (!trace.empty()) {
    for (int i = 0; i < trace[0].gain.rows(); ++i)
      for (int j = 0; j < trace[0].gain.cols(); ++j) out << ",k_" << i << "_" << j;
  }
  out << "\n";
  for (const TrainTraceRow& row : trace) {
    out << row.step << "," << format_full(row.j_estimate);
    for (int i = 0; i < row.gain.rows(); ++i)
      for (int j = 0; j < row.gain.cols(); ++j) out << "," << format_full(row.gain(i, j));
    out << "\n";
  }
  return out.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IntegrityError("cannot write file: " + path);
  out << text;
  if (!out) throw IntegrityError("failed writing file: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IntegrityError("cannot read file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace tvlab
