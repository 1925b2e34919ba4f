#pragma once

// Reporting over estimation results and stores: train/test generalization,
// worst-case deltas, inference budget, size regression, pairwise divergence.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tailq/estimator.hpp"
#include "tailq/kde.hpp"
#include "tailq/quality.hpp"
#include "tailq/trace.hpp"

namespace tailq {

inline constexpr std::uint64_t kDefaultBaselineCount = 262742;

struct GeneralizationReport {
  std::vector<std::string> unit_ids;
  std::vector<double> per_unit_rjsd_train;  // last in-window max rJSD; NaN if never refit
  std::vector<double> per_unit_rjsd_test;   // rJSD(train model, refit on test samples)
  double mean_train = 0.0;
  double mean_test = 0.0;
};

/// Refits every unit on the test samples alone and compares with the trained
/// model. Unit sets must match exactly.
GeneralizationReport generalization_report(const EstimationResult& train, const TimingStore& test);

struct DeltaRow {
  std::string label;
  double threshold_ms = 0.0;
  double train_worst = 0.0;
  double test_worst = 0.0;
  double delta = 0.0;
};

/// Worst-case tail quality of train vs. test per threshold. Percentile
/// thresholds are resolved on the training store and the same absolute value
/// is applied to the test store.
std::vector<DeltaRow> delta_table(const TimingStore& train, const TimingStore& test,
                                  std::span<const ThresholdSpec> thresholds, const QualityMetric& metric);

struct BudgetReport {
  std::uint64_t total_inferences = 0;
  std::uint64_t baseline = kDefaultBaselineCount;
  double ratio = 0.0;
};

BudgetReport budget_report(std::uint64_t total_inferences, std::uint64_t baseline = kDefaultBaselineCount);
BudgetReport budget_report(const EstimationResult& result, std::uint64_t baseline = kDefaultBaselineCount);

struct RegressionFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares of y on x.
RegressionFit ols_fit(std::span<const double> x, std::span<const double> y);

/// OLS of per-unit mean latency on unit size.
RegressionFit size_latency_regression(const TimingStore& store);

struct JsdMatrix {
  std::vector<std::string> unit_ids;  // ascending size
  std::vector<double> sizes;
  std::vector<std::vector<double>> values;
};

/// Symmetric JSD matrix with rows/columns ordered by ascending size (ties by
/// id). With `limit`, only the `limit` largest units are kept.
JsdMatrix pairwise_jsd_matrix(std::span<const DensityModel> models, std::span<const std::string> ids,
                              std::span<const double> sizes, std::optional<std::size_t> limit = std::nullopt);

void write_matrix_csv(const JsdMatrix& matrix, std::ostream& out);
void write_delta_csv(std::span<const DeltaRow> rows, std::ostream& out);

}  // namespace tailq
