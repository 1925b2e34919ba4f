#pragma once

// Workload drivers: each produces one latency per timed unit per round.

#include <chrono>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tailq/trace.hpp"

namespace tailq {

enum class DriverKind { replay, subprocess, synthetic };

std::string_view to_string(DriverKind kind);
DriverKind parse_driver_kind(std::string_view name);

class WorkloadDriver {
 public:
  virtual ~WorkloadDriver() = default;

  virtual DriverKind kind() const = 0;

  /// Times every unit once, serially, in the given order.
  virtual std::vector<double> run_round(std::span<const TimedUnit> units) = 0;

  /// Executes `passes` full rounds and discards the samples.
  void warmup(std::span<const TimedUnit> units, std::size_t passes);
};

/// Replays the rounds of a recorded store, one column per call.
class ReplayDriver final : public WorkloadDriver {
 public:
  explicit ReplayDriver(TimingStore source);

  DriverKind kind() const override { return DriverKind::replay; }
  std::vector<double> run_round(std::span<const TimedUnit> units) override;

  std::size_t cursor() const { return cursor_; }
  const TimingStore& source() const { return source_; }

 private:
  TimingStore source_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t cursor_ = 0;
};

enum class SyntheticFamily { lognormal, gamma, gaussian_mixture, pareto, linear_size };

std::string_view to_string(SyntheticFamily family);
SyntheticFamily parse_synthetic_family(std::string_view name);

struct MixtureComponent {
  double weight = 1.0;
  double mean = 1.0;
  double stddev = 0.1;
};

/// Parameters of a seeded latency generator. Only the fields of the selected
/// family are read. linear_size draws a*size + b + Normal(0, noise).
struct SyntheticSpec {
  SyntheticFamily family = SyntheticFamily::lognormal;
  std::uint64_t seed = 0;

  double log_mean = 0.0;     // lognormal mu
  double log_stddev = 0.1;   // lognormal sigma
  double shape = 2.0;        // gamma k
  double scale = 1.0;        // gamma theta
  std::vector<MixtureComponent> components{MixtureComponent{}};
  double pareto_scale = 1.0;
  double pareto_alpha = 3.0;
  double slope = 0.5;
  double intercept = 10.0;
  double noise = 0.1;

  void validate() const;
};

class SyntheticDriver final : public WorkloadDriver {
 public:
  explicit SyntheticDriver(SyntheticSpec spec);

  DriverKind kind() const override { return DriverKind::synthetic; }
  std::vector<double> run_round(std::span<const TimedUnit> units) override;

  const SyntheticSpec& spec() const { return spec_; }

 private:
  double draw_once(const TimedUnit& unit);
  double draw(const TimedUnit& unit);

  SyntheticSpec spec_;
  std::mt19937_64 rng_;
  std::discrete_distribution<std::size_t> pick_component_;
};

/// Times a child process speaking the line protocol on stdin/stdout:
///
///   -> HELLO tailq/1        <- READY
///   -> INFER <unit_id>      <- DONE <unit_id> | ERR <msg>
///
/// Latency is the monotonic time between writing the request and reading the
/// reply, so it includes pipe overhead.
class SubprocessDriver final : public WorkloadDriver {
 public:
  explicit SubprocessDriver(std::vector<std::string> argv,
                            std::chrono::milliseconds reply_timeout = std::chrono::seconds(60));
  ~SubprocessDriver() override;

  SubprocessDriver(const SubprocessDriver&) = delete;
  SubprocessDriver& operator=(const SubprocessDriver&) = delete;

  DriverKind kind() const override { return DriverKind::subprocess; }
  std::vector<double> run_round(std::span<const TimedUnit> units) override;

 private:
  void send_line(const std::string& line);
  std::string read_line();
  void shutdown();

  std::vector<std::string> argv_;
  std::chrono::milliseconds timeout_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
};

}  // namespace tailq
