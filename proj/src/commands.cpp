#include "tailq/commands.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>

#include "tailq/analysis.hpp"
#include "tailq/error.hpp"
#include "tailq/format.hpp"

namespace tailq {

namespace fs = std::filesystem;

RunConfig::RunConfig()
    : thresholds{ThresholdSpec::percentile(99), ThresholdSpec::percentile(95), ThresholdSpec::percentile(90)} {}

void RunConfig::validate() const {
  estimator.validate();
  (void)make_metric(metric);
  if (thresholds.empty()) throw ConfigError("at least one threshold is required");
  for (const auto& t : thresholds) t.validate();
  if (rounds < 1) throw ConfigError("rounds must be >= 1");
  if (sweep_points < 2) throw ConfigError("sweep points must be >= 2");
  if (baseline_count == 0) throw ConfigError("baseline count must be > 0");
  context.validate();

  const auto& d = driver;
  switch (d.kind) {
    case DriverKind::synthetic:
      d.synthetic.validate();
      if (d.units_path.empty()) {
        if (d.unit_count < 1) throw ConfigError("unit count must be >= 1");
        if (!(d.size_min >= 0.0 && d.size_max >= d.size_min)) throw ConfigError("need 0 <= size_min <= size_max");
        if (!(d.correct_rate >= 0.0 && d.correct_rate <= 1.0)) throw ConfigError("correct_rate must be in [0, 1]");
      }
      break;
    case DriverKind::replay:
      if (d.trace_path.empty()) throw ConfigError("replay driver needs a trace path");
      break;
    case DriverKind::subprocess:
      if (d.command.empty()) throw ConfigError("subprocess driver needs a command");
      if (d.units_path.empty()) throw ConfigError("subprocess driver needs a units manifest");
      if (d.timeout.count() <= 0) throw ConfigError("subprocess timeout must be > 0");
      break;
  }
}

namespace {

template <typename T>
T config_value(const ojson& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const ojson::exception& e) {
    throw ConfigError("bad value for '" + key + "': " + e.what());
  }
}

MixtureComponent parse_component(const ojson& c) {
  if (!c.is_object()) throw ConfigError("mixture components must be objects");
  MixtureComponent mc;
  for (const auto& [key, v] : c.items()) {
    if (key == "weight") mc.weight = config_value<double>(v, key);
    else if (key == "mean") mc.mean = config_value<double>(v, key);
    else if (key == "stddev") mc.stddev = config_value<double>(v, key);
    else throw ConfigError("unknown mixture component key '" + key + "'");
  }
  return mc;
}

void apply_driver_json(const ojson& j, DriverConfig& d) {
  if (!j.is_object()) throw ConfigError("'driver' must be an object");
  auto& s = d.synthetic;
  for (const auto& [key, v] : j.items()) {
    if (key == "kind") d.kind = parse_driver_kind(config_value<std::string>(v, key));
    else if (key == "family") s.family = parse_synthetic_family(config_value<std::string>(v, key));
    else if (key == "log_mean") s.log_mean = config_value<double>(v, key);
    else if (key == "log_stddev") s.log_stddev = config_value<double>(v, key);
    else if (key == "shape") s.shape = config_value<double>(v, key);
    else if (key == "scale") s.scale = config_value<double>(v, key);
    else if (key == "pareto_scale") s.pareto_scale = config_value<double>(v, key);
    else if (key == "pareto_alpha") s.pareto_alpha = config_value<double>(v, key);
    else if (key == "slope") s.slope = config_value<double>(v, key);
    else if (key == "intercept") s.intercept = config_value<double>(v, key);
    else if (key == "noise") s.noise = config_value<double>(v, key);
    else if (key == "components") {
      if (!v.is_array()) throw ConfigError("'components' must be an array");
      s.components.clear();
      for (const auto& c : v) s.components.push_back(parse_component(c));
    }
    else if (key == "trace") d.trace_path = config_value<std::string>(v, key);
    else if (key == "command") d.command = config_value<std::vector<std::string>>(v, key);
    else if (key == "timeout_ms") d.timeout = std::chrono::milliseconds(config_value<long long>(v, key));
    else if (key == "units") d.units_path = config_value<std::string>(v, key);
    else if (key == "unit_count") d.unit_count = config_value<std::size_t>(v, key);
    else if (key == "size_min") d.size_min = config_value<double>(v, key);
    else if (key == "size_max") d.size_max = config_value<double>(v, key);
    else if (key == "correct_rate") d.correct_rate = config_value<double>(v, key);
    else if (key == "units_seed") d.units_seed = config_value<std::uint64_t>(v, key);
    else throw ConfigError("unknown driver key '" + key + "'");
  }
}

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    body();
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "tailq: config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    err << "tailq: error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "tailq: error: " << e.what() << '\n';
    return kExitData;
  }
}

fs::path prepare_out_dir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw DataError("cannot create output directory '" + dir + "': " + ec.message());
  return p;
}

template <typename Writer>
void write_text_file(const fs::path& path, Writer&& write) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  write(out);
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

fs::path require_artifact(const fs::path& dir, const char* name) {
  fs::path p = dir / name;
  if (!fs::exists(p)) throw DataError("missing artifact '" + p.string() + "'");
  return p;
}

}  // namespace

void apply_config_json(const ojson& j, RunConfig& cfg) {
  if (!j.is_object()) throw ConfigError("config document must be an object");
  for (const auto& [key, v] : j.items()) {
    if (key == "driver") apply_driver_json(v, cfg.driver);
    else if (key == "estimator") apply_estimator_json(v, cfg.estimator);
    else if (key == "context") {
      if (!v.is_object()) throw ConfigError("'context' must be an object");
      for (const auto& [k, tag] : v.items()) {
        if (k.empty()) throw ConfigError("context tag keys must be nonempty");
        cfg.context.tags[k] = config_value<std::string>(tag, k);
      }
    }
    else if (key == "metric") cfg.metric = config_value<std::string>(v, key);
    else if (key == "thresholds") {
      cfg.thresholds.clear();
      for (const auto& t : config_value<std::vector<std::string>>(v, key)) cfg.thresholds.push_back(ThresholdSpec::parse(t));
    }
    else if (key == "out") cfg.out_dir = config_value<std::string>(v, key);
    else if (key == "seed") cfg.seed = config_value<std::uint64_t>(v, key);
    else if (key == "baseline_count") cfg.baseline_count = config_value<std::uint64_t>(v, key);
    else if (key == "rounds") cfg.rounds = config_value<std::size_t>(v, key);
    else if (key == "sweep_points") cfg.sweep_points = config_value<std::size_t>(v, key);
    else throw ConfigError("unknown config key '" + key + "'");
  }
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  ojson j;
  try {
    j = ojson::parse(in);
  } catch (const ojson::parse_error& e) {
    throw ConfigError("malformed config file '" + path + "': " + e.what());
  }
  RunConfig cfg;
  apply_config_json(j, cfg);
  return cfg;
}

std::vector<TimedUnit> resolve_units(const RunConfig& cfg) {
  const auto& d = cfg.driver;
  if (!d.units_path.empty()) return load_units(d.units_path);
  if (d.kind == DriverKind::replay) return load_trace(d.trace_path).units();
  if (d.kind == DriverKind::subprocess) throw ConfigError("subprocess driver needs a units manifest");

  std::mt19937_64 rng(d.units_seed);
  std::bernoulli_distribution correct(d.correct_rate);
  std::vector<InstanceMeta> instances;
  const int width = static_cast<int>(std::to_string(d.unit_count).size());
  for (std::size_t i = 0; i < d.unit_count; ++i) {
    InstanceMeta m;
    std::string num = std::to_string(i);
    m.id = "u" + std::string(static_cast<std::size_t>(width) - num.size(), '0') + num;
    m.size = d.unit_count == 1 ? d.size_min
                               : d.size_min + (d.size_max - d.size_min) * static_cast<double>(i) /
                                                  static_cast<double>(d.unit_count - 1);
    m.correct = correct(rng);
    instances.push_back(std::move(m));
  }
  return group_units(instances);
}

std::unique_ptr<WorkloadDriver> make_driver(const RunConfig& cfg) {
  const auto& d = cfg.driver;
  switch (d.kind) {
    case DriverKind::synthetic: {
      SyntheticSpec spec = d.synthetic;
      spec.seed = cfg.seed;
      return std::make_unique<SyntheticDriver>(std::move(spec));
    }
    case DriverKind::replay:
      return std::make_unique<ReplayDriver>(load_trace(d.trace_path));
    case DriverKind::subprocess:
      return std::make_unique<SubprocessDriver>(d.command, d.timeout);
  }
  throw ConfigError("unknown driver kind");
}

int cmd_estimate(const RunConfig& cfg, std::ostream& err) {
  return guarded(err, [&] {
    cfg.validate();
    const auto units = resolve_units(cfg);
    auto driver = make_driver(cfg);
    const fs::path out = prepare_out_dir(cfg.out_dir);

    auto [result, store] = estimate(*driver, units, cfg.estimator, cfg.context);

    save_trace(store, (out / "trace.jsonl").string());
    save_model_store(ModelStore{cfg.estimator, cfg.context, result}, (out / "models.json").string());
    write_text_file(out / "fit_progress.csv", [&](std::ostream& os) { write_fit_log_csv(result, os); });
    write_json_file(to_json(budget_report(result, cfg.baseline_count)), (out / "budget.json").string());
    write_json_file(summary_json(result), (out / "estimation.json").string());
    if (!result.converged_all) {
      err << "tailq: warning: max rounds (" << cfg.estimator.max_rounds << ") reached before all units converged\n";
    }
  });
}

int cmd_simulate(const RunConfig& cfg, std::ostream& err) {
  return guarded(err, [&] {
    cfg.validate();
    const auto units = resolve_units(cfg);
    auto driver = make_driver(cfg);
    const fs::path out = prepare_out_dir(cfg.out_dir);

    TimingStore store(cfg.context, units);
    driver->warmup(units, cfg.estimator.warmup);
    for (std::size_t j = 0; j < cfg.rounds; ++j) store.append_round(driver->run_round(units));
    save_trace(store, (out / "trace.jsonl").string());
  });
}

int cmd_quality(const std::string& trace_path, const RunConfig& cfg, std::ostream& err) {
  return guarded(err, [&] {
    cfg.validate();
    const auto metric = make_metric(cfg.metric);
    const TimingStore store = load_trace(trace_path);
    if (store.empty()) throw DataError("trace '" + trace_path + "' has no samples");
    const fs::path out = prepare_out_dir(cfg.out_dir);

    ojson results = ojson::array();
    for (const auto& spec : cfg.thresholds) results.push_back(to_json(tail_quality(store, spec, *metric)));
    ojson doc;
    doc["metric"] = cfg.metric;
    doc["rounds"] = store.rounds();
    doc["units"] = store.unit_count();
    doc["results"] = std::move(results);
    write_json_file(doc, (out / "quality.json").string());

    const auto grid = latency_grid(store, cfg.sweep_points);
    const auto sweep = quality_threshold_sweep(store, *metric, grid);
    write_text_file(out / "sweep.csv", [&](std::ostream& os) { write_sweep_csv(sweep, os); });
  });
}

int cmd_compare(const std::string& train_dir, const std::string& test_trace, const RunConfig& cfg,
                std::ostream& err) {
  return guarded(err, [&] {
    cfg.validate();
    const auto metric = make_metric(cfg.metric);
    const fs::path dir(train_dir);
    const ModelStore models = load_model_store(require_artifact(dir, "models.json").string());
    const TimingStore train = load_trace(require_artifact(dir, "trace.jsonl").string());
    const TimingStore test = load_trace(test_trace);
    const fs::path out = prepare_out_dir(cfg.out_dir);

    const auto report = generalization_report(models.result, test);
    const auto rows = delta_table(train, test, cfg.thresholds, *metric);

    write_json_file(to_json(report), (out / "generalization.json").string());
    write_text_file(out / "delta.csv", [&](std::ostream& os) { write_delta_csv(rows, os); });
    ojson doc;
    doc["metric"] = cfg.metric;
    doc["generalization"] = to_json(report);
    doc["delta"] = to_json(std::span<const DeltaRow>(rows));
    write_json_file(doc, (out / "compare.json").string());
  });
}

int cmd_report(const std::string& artifacts_dir, const RunConfig& cfg, std::optional<std::size_t> top_k,
               std::ostream& err) {
  return guarded(err, [&] {
    if (cfg.baseline_count == 0) throw ConfigError("baseline count must be > 0");
    if (top_k && *top_k < 2) throw ConfigError("top-k must be >= 2");
    const fs::path dir(artifacts_dir);
    const ModelStore models = load_model_store(require_artifact(dir, "models.json").string());
    const TimingStore store = load_trace(require_artifact(dir, "trace.jsonl").string());
    const fs::path out = prepare_out_dir(cfg.out_dir);

    ojson regression;
    try {
      regression = to_json(size_latency_regression(store));
    } catch (const DataError& e) {
      regression["error"] = e.what();
    }

    const auto& r = models.result;
    std::vector<double> sizes;
    for (const auto& id : r.unit_ids) {
      auto u = store.find_unit(id);
      if (!u) throw DataError("unit '" + id + "' is in models.json but not in trace.jsonl");
      sizes.push_back(store.units()[*u].size);
    }
    const auto matrix = pairwise_jsd_matrix(r.final_models, r.unit_ids, sizes, top_k);
    const auto budget = budget_report(r, cfg.baseline_count);

    write_json_file(regression, (out / "regression.json").string());
    write_text_file(out / "jsd_matrix.csv", [&](std::ostream& os) { write_matrix_csv(matrix, os); });
    write_json_file(to_json(budget), (out / "budget.json").string());

    ojson summary;
    summary["estimation"] = summary_json(r);
    summary["regression"] = regression;
    summary["budget"] = to_json(budget);
    ojson m;
    m["unit_ids"] = matrix.unit_ids;
    m["sizes"] = matrix.sizes;
    m["values"] = matrix.values;
    summary["jsd_matrix"] = std::move(m);
    write_json_file(summary, (out / "summary.json").string());
  });
}

}  // namespace tailq
