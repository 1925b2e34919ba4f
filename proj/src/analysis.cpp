#include "tailq/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <thread>

#include "tailq/divergence.hpp"
#include "tailq/error.hpp"
#include "tailq/format.hpp"

namespace tailq {

namespace {

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

GeneralizationReport generalization_report(const EstimationResult& train, const TimingStore& test) {
  if (test.empty()) throw DataError("test store is empty");
  std::set<std::string> train_ids(train.unit_ids.begin(), train.unit_ids.end());
  for (const auto& u : test.units()) {
    if (!train_ids.count(u.id)) throw DataError("unit mismatch: '" + u.id + "' is not in the training result");
  }

  GeneralizationReport report;
  for (std::size_t i = 0; i < train.unit_ids.size(); ++i) {
    const auto& id = train.unit_ids[i];
    auto t = test.find_unit(id);
    if (!t) throw DataError("unit mismatch: '" + id + "' is missing from the test store");
    const auto& model = train.final_models[i];
    const DensityModel refit = fit_kde(test.latencies(*t), std::nullopt, model.grid_points());
    const auto& hist = train.fit_history[i];
    report.unit_ids.push_back(id);
    report.per_unit_rjsd_train.push_back(hist.empty() ? std::numeric_limits<double>::quiet_NaN() : hist.back());
    report.per_unit_rjsd_test.push_back(rjsd(model, refit));
  }
  report.mean_train = mean_of(report.per_unit_rjsd_train);
  report.mean_test = mean_of(report.per_unit_rjsd_test);
  return report;
}

std::vector<DeltaRow> delta_table(const TimingStore& train, const TimingStore& test,
                                  std::span<const ThresholdSpec> thresholds, const QualityMetric& metric) {
  if (train.unit_count() != test.unit_count()) throw DataError("unit mismatch between train and test stores");
  for (const auto& u : train.units()) {
    if (!test.find_unit(u.id)) throw DataError("unit mismatch: '" + u.id + "' is missing from the test store");
  }
  std::vector<DeltaRow> rows;
  for (const auto& spec : thresholds) {
    const double theta = resolve_threshold(spec, train);
    const auto fixed = ThresholdSpec::absolute(theta);
    const double a = tail_quality(train, fixed, metric).worst_case;
    const double b = tail_quality(test, fixed, metric).worst_case;
    rows.push_back(DeltaRow{spec.label(), theta, a, b, delta(a, b)});
  }
  return rows;
}

BudgetReport budget_report(std::uint64_t total_inferences, std::uint64_t baseline) {
  if (baseline == 0) throw ConfigError("baseline count must be > 0");
  return BudgetReport{total_inferences, baseline, static_cast<double>(total_inferences) / static_cast<double>(baseline)};
}

BudgetReport budget_report(const EstimationResult& result, std::uint64_t baseline) {
  return budget_report(static_cast<std::uint64_t>(result.total_inferences), baseline);
}

RegressionFit ols_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DataError("regression inputs differ in length");
  if (x.size() < 2) throw DataError("regression needs at least 2 points");
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw DataError("regression needs at least 2 distinct sizes");

  RegressionFit fit;
  fit.points = x.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss_res += r * r;
  }
  fit.r_squared = syy == 0.0 ? 1.0 : std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
  return fit;
}

RegressionFit size_latency_regression(const TimingStore& store) {
  if (store.empty()) throw DataError("empty store");
  std::vector<double> x, y;
  for (std::size_t u = 0; u < store.unit_count(); ++u) {
    const auto lat = store.latencies(u);
    x.push_back(store.units()[u].size);
    y.push_back(std::accumulate(lat.begin(), lat.end(), 0.0) / static_cast<double>(lat.size()));
  }
  return ols_fit(x, y);
}

JsdMatrix pairwise_jsd_matrix(std::span<const DensityModel> models, std::span<const std::string> ids,
                              std::span<const double> sizes, std::optional<std::size_t> limit) {
  if (models.size() != ids.size() || models.size() != sizes.size()) {
    throw DataError("models, ids and sizes differ in length");
  }
  std::vector<std::size_t> order(models.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sizes[a] != sizes[b] ? sizes[a] < sizes[b] : ids[a] < ids[b];
  });
  if (limit && *limit < order.size()) order.erase(order.begin(), order.end() - static_cast<std::ptrdiff_t>(*limit));
  if (order.size() < 2) throw DataError("pairwise matrix needs at least 2 models");

  const std::size_t n = order.size();
  JsdMatrix m;
  for (auto i : order) {
    m.unit_ids.push_back(ids[i]);
    m.sizes.push_back(sizes[i]);
  }
  m.values.assign(n, std::vector<double>(n, 0.0));

  // Rows are independent; each worker fills the upper triangle of its rows.
  const std::size_t workers = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 16);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t r = w; r < n; r += workers) {
          for (std::size_t c = r; c < n; ++c) m.values[r][c] = jsd(models[order[r]], models[order[c]]);
        }
      });
    }
  }
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < r; ++c) m.values[r][c] = m.values[c][r];
  }
  return m;
}

void write_matrix_csv(const JsdMatrix& matrix, std::ostream& out) {
  out << "unit_id";
  for (const auto& id : matrix.unit_ids) out << ',' << csv_field(id);
  out << '\n';
  for (std::size_t r = 0; r < matrix.unit_ids.size(); ++r) {
    out << csv_field(matrix.unit_ids[r]);
    for (double v : matrix.values[r]) out << ',' << format_double(v);
    out << '\n';
  }
}

void write_delta_csv(std::span<const DeltaRow> rows, std::ostream& out) {
  out << "threshold,theta_ms,train_worst,test_worst,delta\n";
  for (const auto& r : rows) {
    out << csv_field(r.label) << ',' << format_double(r.threshold_ms) << ',' << format_double(r.train_worst) << ','
        << format_double(r.test_worst) << ',' << format_double(r.delta) << '\n';
  }
}

}  // namespace tailq
