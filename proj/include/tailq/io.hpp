#pragma once

// JSON forms of models, results and reports, and the fitted-model store.

#include <string>

#include "json.hpp"
#include "tailq/analysis.hpp"
#include "tailq/estimator.hpp"
#include "tailq/kde.hpp"
#include "tailq/quality.hpp"
#include "tailq/trace.hpp"

namespace tailq {

using ojson = nlohmann::ordered_json;

ojson to_json(const DensityModel& model);
DensityModel density_from_json(const ojson& j);

ojson to_json(const EstimatorConfig& cfg);
/// Rejects unknown keys; missing keys keep the values already in `cfg`.
void apply_estimator_json(const ojson& j, EstimatorConfig& cfg);

ojson to_json(const TailQualityResult& r);
ojson to_json(const GeneralizationReport& r);
ojson to_json(const BudgetReport& r);
ojson to_json(const RegressionFit& r);
ojson to_json(std::span<const DeltaRow> rows);
ojson summary_json(const EstimationResult& r);

/// Everything needed to reuse a training run: the config, the context and the
/// per-unit models with their convergence history.
struct ModelStore {
  EstimatorConfig config;
  RunContext context;
  EstimationResult result;
};

ojson to_json(const ModelStore& store);
ModelStore model_store_from_json(const ojson& j);
void save_model_store(const ModelStore& store, const std::string& path);
ModelStore load_model_store(const std::string& path);

void write_json_file(const ojson& j, const std::string& path);
ojson read_json_file(const std::string& path);

}  // namespace tailq
