#include "tailq/io.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "tailq/error.hpp"

namespace tailq {

using json = ojson;

namespace {

constexpr const char* kModelStoreFormat = "tailq-models/1";

// NaN has no JSON form; it is written as null and read back as NaN.
ojson number_or_null(double v) { return std::isnan(v) ? ojson(nullptr) : ojson(v); }

double number_from(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!j.is_number()) throw DataError("expected a number in JSON document");
  return j.get<double>();
}

template <typename T>
T get_field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw DataError(std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw DataError(std::string("bad field '") + key + "': " + e.what());
  }
}

}  // namespace

ojson to_json(const DensityModel& model) {
  ojson j;
  j["support_min"] = model.support_min;
  j["support_max"] = model.support_max;
  j["grid_points"] = model.grid_points();
  j["bandwidth_h"] = model.bandwidth;
  j["sample_count"] = model.sample_count;
  j["density"] = model.density;
  return j;
}

DensityModel density_from_json(const json& j) {
  DensityModel m;
  m.support_min = get_field<double>(j, "support_min");
  m.support_max = get_field<double>(j, "support_max");
  m.bandwidth = get_field<double>(j, "bandwidth_h");
  m.sample_count = get_field<std::size_t>(j, "sample_count");
  m.density = get_field<std::vector<double>>(j, "density");
  if (m.density.size() != get_field<std::size_t>(j, "grid_points")) {
    throw DataError("density length does not match grid_points");
  }
  if (m.density.size() < 2 || !(m.support_max > m.support_min)) throw DataError("invalid density model");
  return m;
}

ojson to_json(const EstimatorConfig& cfg) {
  ojson j;
  j["initial_rounds"] = cfg.initial_rounds;
  j["refit_step"] = cfg.refit_step;
  j["window"] = cfg.window;
  j["tolerance"] = cfg.tolerance;
  j["max_rounds"] = cfg.max_rounds;
  j["grid_points"] = cfg.grid_points;
  j["warmup"] = cfg.warmup;
  return j;
}

void apply_estimator_json(const json& j, EstimatorConfig& cfg) {
  if (!j.is_object()) throw ConfigError("'estimator' must be an object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "initial_rounds") cfg.initial_rounds = value.get<std::size_t>();
      else if (key == "refit_step") cfg.refit_step = value.get<std::size_t>();
      else if (key == "window") cfg.window = value.get<std::size_t>();
      else if (key == "tolerance") cfg.tolerance = value.get<double>();
      else if (key == "max_rounds") cfg.max_rounds = value.get<std::size_t>();
      else if (key == "grid_points") cfg.grid_points = value.get<std::size_t>();
      else if (key == "warmup") cfg.warmup = value.get<std::size_t>();
      else throw ConfigError("unknown estimator key '" + key + "'");
    } catch (const json::exception& e) {
      throw ConfigError("bad estimator value for '" + key + "': " + e.what());
    }
  }
}

ojson to_json(const TailQualityResult& r) {
  ojson j;
  j["threshold"] = r.label;
  j["threshold_ms"] = std::isinf(r.threshold_ms) ? ojson("inf") : ojson(r.threshold_ms);
  j["worst_case"] = r.worst_case;
  j["best_case"] = r.best_case;
  j["origin_quality"] = r.origin_quality;
  j["per_round_quality"] = r.per_round_quality;
  return j;
}

ojson to_json(const GeneralizationReport& r) {
  ojson j;
  j["mean_train"] = number_or_null(r.mean_train);
  j["mean_test"] = number_or_null(r.mean_test);
  ojson units = ojson::array();
  for (std::size_t i = 0; i < r.unit_ids.size(); ++i) {
    ojson u;
    u["id"] = r.unit_ids[i];
    u["rjsd_train"] = number_or_null(r.per_unit_rjsd_train[i]);
    u["rjsd_test"] = number_or_null(r.per_unit_rjsd_test[i]);
    units.push_back(std::move(u));
  }
  j["units"] = std::move(units);
  return j;
}

ojson to_json(const BudgetReport& r) {
  ojson j;
  j["total_inferences"] = r.total_inferences;
  j["baseline"] = r.baseline;
  j["ratio"] = r.ratio;
  return j;
}

ojson to_json(const RegressionFit& r) {
  ojson j;
  j["slope"] = r.slope;
  j["intercept"] = r.intercept;
  j["r_squared"] = r.r_squared;
  j["points"] = r.points;
  return j;
}

ojson to_json(std::span<const DeltaRow> rows) {
  ojson out = ojson::array();
  for (const auto& r : rows) {
    ojson j;
    j["threshold"] = r.label;
    j["threshold_ms"] = std::isinf(r.threshold_ms) ? ojson("inf") : ojson(r.threshold_ms);
    j["train_worst"] = r.train_worst;
    j["test_worst"] = r.test_worst;
    j["delta"] = r.delta;
    out.push_back(std::move(j));
  }
  return out;
}

ojson summary_json(const EstimationResult& r) {
  ojson j;
  j["total_rounds"] = r.total_rounds;
  j["total_inferences"] = r.total_inferences;
  j["converged_all"] = r.converged_all;
  std::size_t converged = 0;
  for (bool c : r.converged) converged += c ? 1 : 0;
  j["converged_units"] = converged;
  j["units"] = r.unit_ids.size();
  return j;
}

ojson to_json(const ModelStore& store) {
  const auto& r = store.result;
  ojson j;
  j["format"] = kModelStoreFormat;
  j["estimator"] = to_json(store.config);
  j["context"] = ojson::object();
  for (const auto& [k, v] : store.context.tags) j["context"][k] = v;
  j["total_rounds"] = r.total_rounds;
  j["total_inferences"] = r.total_inferences;
  j["converged_all"] = r.converged_all;
  j["models"] = ojson::object();
  j["converged"] = ojson::object();
  j["fit_history"] = ojson::object();
  for (std::size_t i = 0; i < r.unit_ids.size(); ++i) {
    j["models"][r.unit_ids[i]] = to_json(r.final_models[i]);
    j["converged"][r.unit_ids[i]] = static_cast<bool>(r.converged[i]);
    j["fit_history"][r.unit_ids[i]] = r.fit_history[i];
  }
  return j;
}

ModelStore model_store_from_json(const json& j) {
  if (!j.is_object() || j.value("format", "") != kModelStoreFormat) {
    throw DataError(std::string("not a fitted-model store (expected format '") + kModelStoreFormat + "')");
  }
  ModelStore s;
  try {
    apply_estimator_json(j.at("estimator"), s.config);
  } catch (const ConfigError& e) {
    throw DataError(std::string("model store: ") + e.what());
  }
  for (const auto& [k, v] : j.at("context").items()) s.context.tags[k] = v.get<std::string>();

  auto& r = s.result;
  r.total_rounds = get_field<std::size_t>(j, "total_rounds");
  r.total_inferences = get_field<std::size_t>(j, "total_inferences");
  r.converged_all = get_field<bool>(j, "converged_all");
  const auto& models = j.at("models");
  const auto& converged = j.at("converged");
  const auto& history = j.at("fit_history");
  for (const auto& [id, m] : models.items()) {
    r.unit_ids.push_back(id);
    r.final_models.push_back(density_from_json(m));
    r.converged.push_back(converged.contains(id) ? converged.at(id).get<bool>() : false);
    std::vector<double> hist;
    if (history.contains(id)) {
      for (const auto& v : history.at(id)) hist.push_back(number_from(v));
    }
    r.fit_history.push_back(std::move(hist));
  }
  return s;
}

void save_model_store(const ModelStore& store, const std::string& path) { write_json_file(to_json(store), path); }

ModelStore load_model_store(const std::string& path) {
  try {
    return model_store_from_json(read_json_file(path));
  } catch (const json::exception& e) {
    throw DataError("malformed model store '" + path + "': " + e.what());
  }
}

void write_json_file(const ojson& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
  if (!out) throw DataError("failed writing '" + path + "'");
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError("malformed JSON in '" + path + "': " + e.what());
  }
}

}  // namespace tailq
