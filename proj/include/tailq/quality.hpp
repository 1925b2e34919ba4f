#pragma once

// Quality under an inference-time threshold: results slower than the
// threshold are scored as errors, round by round.

#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tailq/trace.hpp"

namespace tailq {

/// "@99" (nearest-rank percentile of pooled latencies), "472.41ms" or
/// "472.41" (absolute milliseconds), or "inf".
struct ThresholdSpec {
  enum class Kind { absolute_ms, percentile };

  Kind kind = Kind::absolute_ms;
  double value = 0.0;

  static ThresholdSpec absolute(double ms);
  static ThresholdSpec percentile(double p);
  static ThresholdSpec parse(std::string_view text);

  void validate() const;
  std::string label() const;
};

/// Sorted value at 1-based index ceil(p/100 * N).
double nearest_rank(std::span<const double> sorted, double p);

double resolve_threshold(const ThresholdSpec& spec, const TimingStore& store);

/// Maps per-instance payloads and validity flags to a quality in [0, 100].
/// Invalid instances must be scored as errors.
class QualityMetric {
 public:
  virtual ~QualityMetric() = default;
  virtual std::string name() const = 0;
  virtual double evaluate(std::span<const InstanceMeta> instances, const std::vector<bool>& valid) const = 0;
};

/// 100 * sum(payload of valid instances) / n. `correct` counts as 1/0, a
/// `score` payload contributes its value.
class AccuracyMetric final : public QualityMetric {
 public:
  std::string name() const override { return "accuracy"; }
  double evaluate(std::span<const InstanceMeta> instances, const std::vector<bool>& valid) const override;
};

/// Macro-averaged F1 over the classes seen in labels and valid predictions.
/// An invalid instance is predicted as a reserved class that is never a true
/// label. Needs `label` and `prediction` on every instance.
class MacroF1Metric final : public QualityMetric {
 public:
  std::string name() const override { return "macro_f1"; }
  double evaluate(std::span<const InstanceMeta> instances, const std::vector<bool>& valid) const override;
};

class CustomMetric final : public QualityMetric {
 public:
  using Fn = std::function<double(std::span<const InstanceMeta>, const std::vector<bool>&)>;
  CustomMetric(std::string name, Fn fn) : name_(std::move(name)), fn_(std::move(fn)) {}
  std::string name() const override { return name_; }
  double evaluate(std::span<const InstanceMeta> instances, const std::vector<bool>& valid) const override {
    return fn_(instances, valid);
  }

 private:
  std::string name_;
  Fn fn_;
};

std::unique_ptr<QualityMetric> make_metric(std::string_view name);

/// Per-instance validity for one round: latency <= theta. Batch members
/// inherit their unit's flag.
std::vector<bool> tag_validity(const TimingStore& store, std::size_t round, double theta);

double evaluate_round(std::span<const InstanceMeta> instances, const std::vector<bool>& valid,
                      const QualityMetric& metric);

struct TailQualityResult {
  std::string label;
  double threshold_ms = 0.0;
  std::vector<double> per_round_quality;
  double worst_case = 0.0;
  double best_case = 0.0;
  double origin_quality = 0.0;
};

TailQualityResult tail_quality(const TimingStore& store, const ThresholdSpec& spec, const QualityMetric& metric);

struct SweepPoint {
  double theta_ms = 0.0;
  double worst = 0.0;
  double best = 0.0;
  double origin = 0.0;
};

std::vector<SweepPoint> quality_threshold_sweep(const TimingStore& store, const QualityMetric& metric,
                                                std::span<const double> grid);

/// `points` thresholds evenly spaced from the smallest to the largest pooled
/// latency.
std::vector<double> latency_grid(const TimingStore& store, std::size_t points);

void write_sweep_csv(std::span<const SweepPoint> sweep, std::ostream& out);

/// Worst-case difference between training and testing: train - test.
inline double delta(double train_worst, double test_worst) { return train_worst - test_worst; }

}  // namespace tailq
