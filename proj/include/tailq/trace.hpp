#pragma once

// Timed units, latency samples and the JSON Lines trace format.

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tailq {

/// One dataset instance: identity, size, and the cached prediction outcome.
///
/// Predictions are assumed deterministic across rounds, so the correctness
/// payload is stored once. `label`/`prediction` are optional class names used
/// by classification metrics such as macro-F1.
struct InstanceMeta {
  std::string id;
  double size = 0.0;
  std::optional<bool> correct;
  std::optional<double> score;
  std::optional<std::string> batch_id;
  std::optional<std::string> label;
  std::optional<std::string> prediction;

  // Contribution of a valid instance to an accuracy-style metric: 1/0 for
  // `correct`, the raw value for `score`.
  double payload() const;

  bool operator==(const InstanceMeta&) const = default;
};

/// The entity timed once per round: a single instance, or a whole batch whose
/// members share one latency.
struct TimedUnit {
  std::string id;
  double size = 0.0;
  std::vector<InstanceMeta> members;

  bool is_batch() const { return members.size() != 1 || members.front().batch_id.has_value(); }
  bool operator==(const TimedUnit&) const = default;
};

/// Free-form conditioning labels for a run (system, framework, model, ...).
struct RunContext {
  std::map<std::string, std::string> tags;

  void validate() const;
  bool operator==(const RunContext&) const = default;
};

/// Rectangular latency matrix: units x rounds, milliseconds.
class TimingStore {
 public:
  TimingStore() = default;
  TimingStore(RunContext context, std::vector<TimedUnit> units);

  const RunContext& context() const { return context_; }
  const std::vector<TimedUnit>& units() const { return units_; }
  std::size_t unit_count() const { return units_.size(); }
  std::size_t rounds() const { return rounds_; }
  bool empty() const { return units_.empty() || rounds_ == 0; }

  // Samples of unit `unit`, indexed by round.
  std::span<const double> latencies(std::size_t unit) const { return latencies_.at(unit); }
  double latency(std::size_t unit, std::size_t round) const { return latencies_.at(unit).at(round); }

  std::optional<std::size_t> find_unit(const std::string& id) const;

  // Flattened member instances in unit order; the index of the owning unit
  // for each instance is written to `owner` when provided.
  std::vector<InstanceMeta> instances(std::vector<std::size_t>* owner = nullptr) const;

  /// Appends one round. `samples` is aligned with units().
  void append_round(std::span<const double> samples);
  /// Appends one round keyed by unit id; every unit must appear exactly once.
  void append_round(const std::map<std::string, double>& samples);

  /// All samples of all rounds, ascending.
  std::vector<double> pooled_latencies() const;

  bool operator==(const TimingStore&) const = default;

 private:
  RunContext context_;
  std::vector<TimedUnit> units_;
  std::vector<std::vector<double>> latencies_;
  std::size_t rounds_ = 0;
};

// Throws DataError unless `v` is a finite, strictly positive latency.
void check_latency(double v);

TimingStore load_trace(const std::string& path);
TimingStore read_trace(std::istream& in);
void save_trace(const TimingStore& store, const std::string& path);
void write_trace(const TimingStore& store, std::ostream& out);

/// Units without samples, read from a JSON Lines manifest whose records carry
/// the trace instance fields but no round/latency.
std::vector<TimedUnit> load_units(const std::string& path);
std::vector<TimedUnit> read_units(std::istream& in);

/// Groups instances into timed units: members sharing a batch_id collapse into
/// one unit (id = batch_id, size = sum of member sizes), order of first
/// appearance preserved.
std::vector<TimedUnit> group_units(const std::vector<InstanceMeta>& instances);

}  // namespace tailq
