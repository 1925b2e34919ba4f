#include "tailq/quality.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>

#include "tailq/error.hpp"
#include "tailq/format.hpp"

namespace tailq {

ThresholdSpec ThresholdSpec::absolute(double ms) {
  ThresholdSpec s{Kind::absolute_ms, ms};
  s.validate();
  return s;
}

ThresholdSpec ThresholdSpec::percentile(double p) {
  ThresholdSpec s{Kind::percentile, p};
  s.validate();
  return s;
}

namespace {

double parse_number(std::string_view text, std::string_view whole) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ConfigError("invalid threshold '" + std::string(whole) + "'");
  }
  return v;
}

}  // namespace

ThresholdSpec ThresholdSpec::parse(std::string_view text) {
  if (text == "inf" || text == "+inf" || text == "infms") {
    return absolute(std::numeric_limits<double>::infinity());
  }
  if (!text.empty() && text.front() == '@') {
    std::string_view body = text.substr(1);
    if (!body.empty() && body.back() == '%') body.remove_suffix(1);
    return percentile(parse_number(body, text));
  }
  std::string_view body = text;
  if (body.size() > 2 && body.substr(body.size() - 2) == "ms") body.remove_suffix(2);
  return absolute(parse_number(body, text));
}

void ThresholdSpec::validate() const {
  if (kind == Kind::absolute_ms) {
    if (!(value > 0.0)) throw ConfigError("absolute threshold must be > 0 ms");
  } else if (!(value > 0.0 && value <= 100.0)) {
    throw ConfigError("percentile threshold must be in (0, 100]");
  }
}

std::string ThresholdSpec::label() const {
  if (kind == Kind::percentile) return "@" + format_double(value);
  if (std::isinf(value)) return "inf";
  return format_double(value) + "ms";
}

double nearest_rank(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw DataError("empty store");
  if (!(p > 0.0 && p <= 100.0)) throw ConfigError("percentile must be in (0, 100]");
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

double resolve_threshold(const ThresholdSpec& spec, const TimingStore& store) {
  spec.validate();
  if (spec.kind == ThresholdSpec::Kind::absolute_ms) return spec.value;
  const auto pooled = store.pooled_latencies();
  return nearest_rank(pooled, spec.value);
}

namespace {

void check_inputs(std::span<const InstanceMeta> instances, const std::vector<bool>& valid) {
  if (instances.empty()) throw DataError("empty instance set");
  if (valid.size() != instances.size()) throw DataError("validity flags do not cover all instances");
}

}  // namespace

double AccuracyMetric::evaluate(std::span<const InstanceMeta> instances, const std::vector<bool>& valid) const {
  check_inputs(instances, valid);
  double hits = 0.0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    // payload() also rejects instances without a correctness payload.
    const double v = instances[i].payload();
    if (valid[i]) hits += v;
  }
  return 100.0 * hits / static_cast<double>(instances.size());
}

double MacroF1Metric::evaluate(std::span<const InstanceMeta> instances, const std::vector<bool>& valid) const {
  check_inputs(instances, valid);
  struct Counts {
    std::size_t tp = 0, fp = 0, fn = 0;
  };
  std::map<std::string, Counts> classes;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& m = instances[i];
    if (!m.label || !m.prediction) throw DataError("macro_f1 needs label and prediction for instance '" + m.id + "'");
    auto& truth = classes[*m.label];
    if (!valid[i]) {
      ++truth.fn;
    } else if (*m.prediction == *m.label) {
      ++truth.tp;
    } else {
      ++truth.fn;
      ++classes[*m.prediction].fp;
    }
  }
  double sum = 0.0;
  for (const auto& [name, c] : classes) {
    const std::size_t denom = 2 * c.tp + c.fp + c.fn;
    sum += denom == 0 ? 0.0 : 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
  }
  return 100.0 * sum / static_cast<double>(classes.size());
}

std::unique_ptr<QualityMetric> make_metric(std::string_view name) {
  if (name == "accuracy") return std::make_unique<AccuracyMetric>();
  if (name == "macro_f1") return std::make_unique<MacroF1Metric>();
  throw ConfigError("unknown metric '" + std::string(name) + "'");
}

std::vector<bool> tag_validity(const TimingStore& store, std::size_t round, double theta) {
  if (round >= store.rounds()) {
    throw DataError("round " + std::to_string(round) + " out of range (" + std::to_string(store.rounds()) + " rounds)");
  }
  std::vector<bool> flags;
  for (std::size_t u = 0; u < store.unit_count(); ++u) {
    const bool ok = store.latency(u, round) <= theta;
    flags.insert(flags.end(), store.units()[u].members.size(), ok);
  }
  return flags;
}

double evaluate_round(std::span<const InstanceMeta> instances, const std::vector<bool>& valid,
                      const QualityMetric& metric) {
  check_inputs(instances, valid);
  return metric.evaluate(instances, valid);
}

namespace {

TailQualityResult tail_quality_at(const TimingStore& store, double theta, const QualityMetric& metric,
                                  const std::vector<InstanceMeta>& instances, std::string label) {
  TailQualityResult r;
  r.label = std::move(label);
  r.threshold_ms = theta;
  r.origin_quality = evaluate_round(instances, std::vector<bool>(instances.size(), true), metric);
  r.per_round_quality.reserve(store.rounds());
  for (std::size_t j = 0; j < store.rounds(); ++j) {
    r.per_round_quality.push_back(evaluate_round(instances, tag_validity(store, j, theta), metric));
  }
  const auto [lo, hi] = std::minmax_element(r.per_round_quality.begin(), r.per_round_quality.end());
  r.worst_case = *lo;
  r.best_case = *hi;
  return r;
}

}  // namespace

TailQualityResult tail_quality(const TimingStore& store, const ThresholdSpec& spec, const QualityMetric& metric) {
  if (store.empty()) throw DataError("empty store");
  const double theta = resolve_threshold(spec, store);
  return tail_quality_at(store, theta, metric, store.instances(), spec.label());
}

std::vector<SweepPoint> quality_threshold_sweep(const TimingStore& store, const QualityMetric& metric,
                                                std::span<const double> grid) {
  if (grid.empty()) throw ConfigError("threshold grid is empty");
  if (!std::is_sorted(grid.begin(), grid.end())) throw ConfigError("threshold grid must be ascending");
  if (store.empty()) throw DataError("empty store");
  const auto instances = store.instances();
  std::vector<SweepPoint> out;
  out.reserve(grid.size());
  for (double theta : grid) {
    if (!(theta > 0.0)) throw ConfigError("threshold must be > 0 ms");
    auto r = tail_quality_at(store, theta, metric, instances, {});
    out.push_back(SweepPoint{theta, r.worst_case, r.best_case, r.origin_quality});
  }
  return out;
}

std::vector<double> latency_grid(const TimingStore& store, std::size_t points) {
  if (points < 2) throw ConfigError("sweep needs at least 2 points");
  const auto pooled = store.pooled_latencies();
  const double lo = pooled.front();
  const double hi = pooled.back();
  std::vector<double> grid(points);
  for (std::size_t k = 0; k < points; ++k) {
    grid[k] = k + 1 == points ? hi : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1);
  }
  return grid;
}

void write_sweep_csv(std::span<const SweepPoint> sweep, std::ostream& out) {
  out << "theta_ms,worst,best,origin\n";
  for (const auto& p : sweep) {
    out << format_double(p.theta_ms) << ',' << format_double(p.worst) << ',' << format_double(p.best) << ','
        << format_double(p.origin) << '\n';
  }
}

}  // namespace tailq
