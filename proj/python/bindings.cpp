#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tailq/analysis.hpp"
#include "tailq/divergence.hpp"
#include "tailq/error.hpp"
#include "tailq/estimator.hpp"
#include "tailq/io.hpp"
#include "tailq/kde.hpp"
#include "tailq/quality.hpp"
#include "tailq/runner.hpp"
#include "tailq/trace.hpp"

namespace py = pybind11;
using namespace tailq;

namespace {

std::vector<double> to_vector(std::span<const double> s) { return {s.begin(), s.end()}; }

TimingStore store_from_rows(const std::vector<std::string>& ids, const std::vector<std::vector<double>>& latencies,
                            const std::vector<bool>& correct, const std::vector<double>& sizes) {
  if (ids.size() != latencies.size()) throw DataError("ids and latency rows differ in length");
  std::vector<InstanceMeta> inst;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    InstanceMeta m;
    m.id = ids[i];
    m.size = sizes.empty() ? 0.0 : sizes.at(i);
    m.correct = correct.empty() ? true : static_cast<bool>(correct.at(i));
    inst.push_back(std::move(m));
  }
  TimingStore s({}, group_units(inst));
  const std::size_t rounds = latencies.empty() ? 0 : latencies.front().size();
  for (std::size_t r = 0; r < rounds; ++r) {
    std::vector<double> col;
    for (const auto& row : latencies) {
      if (row.size() != rounds) throw DataError("ragged rounds");
      col.push_back(row[r]);
    }
    s.append_round(col);
  }
  return s;
}

std::unique_ptr<QualityMetric> metric_from(const py::object& metric) {
  if (py::isinstance<py::str>(metric)) return make_metric(metric.cast<std::string>());
  auto fn = metric.cast<py::function>();
  return std::make_unique<CustomMetric>("custom", [fn](std::span<const InstanceMeta> inst, const std::vector<bool>& valid) {
    return fn(std::vector<InstanceMeta>(inst.begin(), inst.end()), valid).cast<double>();
  });
}

}  // namespace

PYBIND11_MODULE(_tailq, m) {
  m.doc() = "Latency distribution estimation and tail quality";

  // DriverError derives from DataError and maps to it.
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<DensityModel>(m, "DensityModel")
      .def_readonly("support_min", &DensityModel::support_min)
      .def_readonly("support_max", &DensityModel::support_max)
      .def_readonly("bandwidth", &DensityModel::bandwidth)
      .def_readonly("sample_count", &DensityModel::sample_count)
      .def_readonly("density", &DensityModel::density)
      .def_property_readonly("grid_points", &DensityModel::grid_points)
      .def_property_readonly("step", &DensityModel::step)
      .def("__call__", [](const DensityModel& d, double t) { return eval_density(d, t); })
      .def("to_json", [](const DensityModel& d) { return to_json(d).dump(); });

  m.def("silverman_bandwidth", [](const std::vector<double>& x) { return silverman_bandwidth(x); }, py::arg("samples"));
  m.def(
      "fit_kde",
      [](const std::vector<double>& x, std::optional<double> h, std::size_t grid_points) {
        return fit_kde(x, h, grid_points);
      },
      py::arg("samples"), py::arg("bandwidth") = py::none(), py::arg("grid_points") = kDefaultGridPoints);
  m.def("eval_density", &eval_density, py::arg("model"), py::arg("t"));
  m.def("jsd", py::overload_cast<const DensityModel&, const DensityModel&>(&jsd));
  m.def("rjsd", py::overload_cast<const DensityModel&, const DensityModel&>(&rjsd));
  m.def("jsd_grid", [](std::vector<double> p, std::vector<double> q, double lo, double hi) {
    return jsd(make_aligned_pair(std::move(p), std::move(q), lo, hi));
  });

  py::class_<TimingStore>(m, "TimingStore")
      .def_static("from_rows", &store_from_rows, py::arg("ids"), py::arg("latencies"),
                  py::arg("correct") = std::vector<bool>{}, py::arg("sizes") = std::vector<double>{})
      .def_static("load", &load_trace, py::arg("path"))
      .def("save", [](const TimingStore& s, const std::string& path) { save_trace(s, path); })
      .def_property_readonly("rounds", &TimingStore::rounds)
      .def_property_readonly("unit_count", &TimingStore::unit_count)
      .def_property_readonly("unit_ids",
                             [](const TimingStore& s) {
                               std::vector<std::string> ids;
                               for (const auto& u : s.units()) ids.push_back(u.id);
                               return ids;
                             })
      .def("latencies", [](const TimingStore& s, std::size_t u) { return to_vector(s.latencies(u)); })
      .def("pooled_latencies", &TimingStore::pooled_latencies);

  m.def(
      "resolve_threshold",
      [](const std::string& spec, const TimingStore& s) { return resolve_threshold(ThresholdSpec::parse(spec), s); },
      py::arg("threshold"), py::arg("store"));

  py::class_<TailQualityResult>(m, "TailQualityResult")
      .def_readonly("label", &TailQualityResult::label)
      .def_readonly("threshold_ms", &TailQualityResult::threshold_ms)
      .def_readonly("per_round_quality", &TailQualityResult::per_round_quality)
      .def_readonly("worst_case", &TailQualityResult::worst_case)
      .def_readonly("best_case", &TailQualityResult::best_case)
      .def_readonly("origin_quality", &TailQualityResult::origin_quality);

  m.def(
      "tail_quality",
      [](const TimingStore& s, const std::string& spec, const py::object& metric) {
        return tail_quality(s, ThresholdSpec::parse(spec), *metric_from(metric));
      },
      py::arg("store"), py::arg("threshold"), py::arg("metric") = "accuracy",
      "metric is 'accuracy', 'macro_f1' or a callable(instances, valid) -> percent.");
  m.def(
      "quality_threshold_sweep",
      [](const TimingStore& s, const std::vector<double>& grid, const py::object& metric) {
        std::vector<std::tuple<double, double, double, double>> out;
        for (const auto& p : quality_threshold_sweep(s, *metric_from(metric), grid))
          out.emplace_back(p.theta_ms, p.worst, p.best, p.origin);
        return out;
      },
      py::arg("store"), py::arg("grid"), py::arg("metric") = "accuracy");

  py::class_<InstanceMeta>(m, "InstanceMeta")
      .def_readonly("id", &InstanceMeta::id)
      .def_readonly("size", &InstanceMeta::size)
      .def_readonly("correct", &InstanceMeta::correct)
      .def_readonly("score", &InstanceMeta::score)
      .def_readonly("label", &InstanceMeta::label)
      .def_readonly("prediction", &InstanceMeta::prediction);

  py::class_<EstimatorConfig>(m, "EstimatorConfig")
      .def(py::init<>())
      .def_readwrite("initial_rounds", &EstimatorConfig::initial_rounds)
      .def_readwrite("refit_step", &EstimatorConfig::refit_step)
      .def_readwrite("window", &EstimatorConfig::window)
      .def_readwrite("tolerance", &EstimatorConfig::tolerance)
      .def_readwrite("max_rounds", &EstimatorConfig::max_rounds)
      .def_readwrite("grid_points", &EstimatorConfig::grid_points)
      .def_readwrite("warmup", &EstimatorConfig::warmup);

  py::class_<EstimationResult>(m, "EstimationResult")
      .def_readonly("unit_ids", &EstimationResult::unit_ids)
      .def_readonly("final_models", &EstimationResult::final_models)
      .def_readonly("converged", &EstimationResult::converged)
      .def_readonly("fit_history", &EstimationResult::fit_history)
      .def_readonly("total_rounds", &EstimationResult::total_rounds)
      .def_readonly("total_inferences", &EstimationResult::total_inferences)
      .def_readonly("converged_all", &EstimationResult::converged_all);

  m.def(
      "estimate_synthetic",
      [](const std::string& family, std::uint64_t seed, std::size_t units, const EstimatorConfig& cfg, double log_mean,
         double log_stddev) {
        SyntheticSpec spec;
        spec.family = parse_synthetic_family(family);
        spec.seed = seed;
        spec.log_mean = log_mean;
        spec.log_stddev = log_stddev;
        SyntheticDriver driver(spec);
        std::vector<InstanceMeta> inst(units);
        for (std::size_t i = 0; i < units; ++i) {
          inst[i].id = "u" + std::to_string(i);
          inst[i].size = static_cast<double>(i + 1);
          inst[i].correct = true;
        }
        auto est = estimate(driver, group_units(inst), cfg);
        return py::make_tuple(est.result, est.store);
      },
      py::arg("family") = "lognormal", py::arg("seed") = 0, py::arg("units") = 20, py::arg("config") = EstimatorConfig{},
      py::arg("log_mean") = 0.0, py::arg("log_stddev") = 0.1);
  m.def(
      "estimate_replay",
      [](const TimingStore& source, const EstimatorConfig& cfg) {
        ReplayDriver driver(source);
        auto est = estimate(driver, source.units(), cfg);
        return py::make_tuple(est.result, est.store);
      },
      py::arg("source"), py::arg("config") = EstimatorConfig{});
  m.def(
      "time_subprocess",
      [](const std::vector<std::string>& argv, const std::vector<std::string>& ids, std::size_t rounds) {
        std::vector<InstanceMeta> inst(ids.size());
        for (std::size_t i = 0; i < ids.size(); ++i) {
          inst[i].id = ids[i];
          inst[i].correct = true;
        }
        const auto units = group_units(inst);
        SubprocessDriver driver(argv);
        std::vector<std::vector<double>> out;
        for (std::size_t r = 0; r < rounds; ++r) out.push_back(driver.run_round(units));
        return out;
      },
      py::arg("argv"), py::arg("ids"), py::arg("rounds") = 1);

  m.def("delta", &delta, py::arg("train_worst"), py::arg("test_worst"));
  m.def(
      "budget_ratio",
      [](std::uint64_t total, std::uint64_t baseline) { return budget_report(total, baseline).ratio; },
      py::arg("total_inferences"), py::arg("baseline") = kDefaultBaselineCount);
  m.def(
      "ols_fit",
      [](const std::vector<double>& x, const std::vector<double>& y) {
        auto f = ols_fit(x, y);
        return py::make_tuple(f.slope, f.intercept, f.r_squared);
      },
      py::arg("x"), py::arg("y"));
  m.def(
      "generalization",
      [](const EstimationResult& train, const TimingStore& test) {
        auto r = generalization_report(train, test);
        return py::make_tuple(r.mean_train, r.mean_test, r.per_unit_rjsd_test);
      },
      py::arg("train"), py::arg("test"));
  m.attr("DEFAULT_BASELINE_COUNT") = kDefaultBaselineCount;
}
