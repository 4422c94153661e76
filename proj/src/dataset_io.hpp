#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "curation.hpp"
#include "mechanism.hpp"
#include "metrics.hpp"
#include "saddle.hpp"
#include "shapley.hpp"

namespace tvlab {

// dataset.json schema: {system, policy, trajectories:[{id, seed, states,
// actions, noises, rewards}]}, full double precision.
nlohmann::json dataset_to_json(const Dataset& ds);
Dataset dataset_from_json(const nlohmann::json& j, const RolloutConfig& generation);

nlohmann::json valuation_to_json(const ValuationReport& report, const std::string& variant);
ValuationReport valuation_from_json(const nlohmann::json& j);

nlohmann::json mechanism_to_json(const MechanismReport& report);
nlohmann::json curation_to_json(const std::vector<CurationRow>& rows, const std::string& variant);
nlohmann::json saddle_to_json(const SweepResult& sweep);

// CSV emitters (numbers printed with %.17g)
std::string dataset_to_csv(const Dataset& ds);  // one row per (trajectory, step)
std::string metrics_to_csv(const Dataset& ds, const std::vector<InfoSummary>& summaries,
                           const std::vector<int>& deciles);
std::string valuation_to_csv(const ValuationReport& report,
                             const std::vector<InfoSummary>& summaries,
                             const std::vector<double>& grad_var);
std::string mechanism_to_csv(const MechanismReport& report);
std::string curation_to_csv(const std::vector<CurationRow>& rows);
std::string saddle_to_csv(const SweepResult& sweep);
std::string scatter_to_csv(const std::vector<InfoSummary>& summaries,
                           const std::vector<double>& grad_var,
                           const std::vector<double>& shapley);  // Fig-2-style plot data
std::string train_trace_to_csv(const std::vector<TrainTraceRow>& trace);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

std::string format_full(double v);  // shortest round-trip-safe decimal

}  // namespace tvlab
