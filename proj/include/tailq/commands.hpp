#pragma once

// Pipeline commands behind the `tailq` executable. Each returns a process
// exit code: 0 success, 1 data error, 2 config error.

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tailq/estimator.hpp"
#include "tailq/io.hpp"
#include "tailq/quality.hpp"
#include "tailq/runner.hpp"

namespace tailq {

inline constexpr int kExitOk = 0;
inline constexpr int kExitData = 1;
inline constexpr int kExitConfig = 2;

struct DriverConfig {
  DriverKind kind = DriverKind::synthetic;
  SyntheticSpec synthetic;
  std::string trace_path;                 // replay source
  std::vector<std::string> command;       // subprocess argv
  std::chrono::milliseconds timeout{60000};
  std::string units_path;                 // unit manifest (JSON Lines)
  // Generated units for synthetic runs without a manifest.
  std::size_t unit_count = 20;
  double size_min = 1.0;
  double size_max = 100.0;
  double correct_rate = 0.8;
  // Seeds generated correctness only, so test runs with a different latency
  // seed keep the same predictions.
  std::uint64_t units_seed = 0;
};

struct RunConfig {
  DriverConfig driver;
  EstimatorConfig estimator;
  RunContext context;
  std::string metric = "accuracy";
  std::vector<ThresholdSpec> thresholds;
  std::string out_dir = "tailq-out";
  std::uint64_t seed = 0;
  std::uint64_t baseline_count = 262742;
  std::size_t rounds = 30;        // simulate
  std::size_t sweep_points = 50;  // quality sweep resolution

  RunConfig();
  void validate() const;
};

/// Applies a JSON config document on top of `cfg`. Unknown keys are rejected.
void apply_config_json(const ojson& j, RunConfig& cfg);
RunConfig load_run_config(const std::string& path);

/// Units to time: the manifest if given, the replay source's units, or
/// generated units (evenly spaced sizes, seeded correctness).
std::vector<TimedUnit> resolve_units(const RunConfig& cfg);
std::unique_ptr<WorkloadDriver> make_driver(const RunConfig& cfg);

int cmd_estimate(const RunConfig& cfg, std::ostream& err);
int cmd_simulate(const RunConfig& cfg, std::ostream& err);
int cmd_quality(const std::string& trace_path, const RunConfig& cfg, std::ostream& err);
int cmd_compare(const std::string& train_dir, const std::string& test_trace, const RunConfig& cfg, std::ostream& err);
int cmd_report(const std::string& artifacts_dir, const RunConfig& cfg, std::optional<std::size_t> top_k,
               std::ostream& err);

}  // namespace tailq
