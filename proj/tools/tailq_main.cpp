// tailq: estimate per-instance latency distributions and tail quality.
//
// Precedence: built-in defaults < --config file < command-line flags.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "tailq/commands.hpp"
#include "tailq/error.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> driver;
  std::optional<std::size_t> rounds_init, refit_step, window, max_rounds, warmup;
  std::optional<double> tolerance;
  std::vector<std::string> thresholds;
  std::optional<std::string> metric;
  std::optional<std::uint64_t> baseline;
  std::optional<std::string> out;
  std::optional<std::string> units;
  std::optional<std::string> command;
  std::optional<std::string> replay_trace;
  std::optional<std::size_t> rounds;
  std::optional<std::size_t> sweep_points;
};

std::vector<std::string> split_command(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string w; is >> w;) out.push_back(w);
  return out;
}

tailq::RunConfig build_config(const Overrides& o) {
  tailq::RunConfig cfg = o.config.empty() ? tailq::RunConfig{} : tailq::load_run_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.driver) cfg.driver.kind = tailq::parse_driver_kind(*o.driver);
  if (o.rounds_init) cfg.estimator.initial_rounds = *o.rounds_init;
  if (o.refit_step) cfg.estimator.refit_step = *o.refit_step;
  if (o.window) cfg.estimator.window = *o.window;
  if (o.max_rounds) cfg.estimator.max_rounds = *o.max_rounds;
  if (o.warmup) cfg.estimator.warmup = *o.warmup;
  if (o.tolerance) cfg.estimator.tolerance = *o.tolerance;
  if (!o.thresholds.empty()) {
    cfg.thresholds.clear();
    for (const auto& t : o.thresholds) cfg.thresholds.push_back(tailq::ThresholdSpec::parse(t));
  }
  if (o.metric) cfg.metric = *o.metric;
  if (o.baseline) cfg.baseline_count = *o.baseline;
  if (o.out) cfg.out_dir = *o.out;
  if (o.units) cfg.driver.units_path = *o.units;
  if (o.command) cfg.driver.command = split_command(*o.command);
  if (o.replay_trace) cfg.driver.trace_path = *o.replay_trace;
  if (o.rounds) cfg.rounds = *o.rounds;
  if (o.sweep_points) cfg.sweep_points = *o.sweep_points;
  return cfg;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("tailq");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("TAILQ_LOG");
  const std::string level = env ? env : "error";
  if (level == "debug") spdlog::set_level(spdlog::level::debug);
  else if (level == "info") spdlog::set_level(spdlog::level::info);
  else spdlog::set_level(spdlog::level::err);
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();

  CLI::App app{"tailq - inference tail quality toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  Overrides o;
  app.add_option("--config", o.config, "JSON config file");
  app.add_option("--seed", o.seed, "RNG seed for synthetic drivers");
  app.add_option("--driver", o.driver, "Workload driver")->check(CLI::IsMember({"replay", "subprocess", "synthetic"}));
  app.add_option("--rounds-init", o.rounds_init, "Initial rounds before the first fit");
  app.add_option("--refit-step", o.refit_step, "Rounds between refits");
  app.add_option("--window", o.window, "Number of previous fits compared");
  app.add_option("--tolerance", o.tolerance, "rJSD convergence tolerance");
  app.add_option("--max-rounds", o.max_rounds, "Safety cap on total rounds");
  app.add_option("--warmup", o.warmup, "Discarded passes before timing");
  app.add_option("--threshold", o.thresholds, "Threshold: @99, 472.41ms or inf (repeatable)");
  app.add_option("--metric", o.metric, "Quality metric")->check(CLI::IsMember({"accuracy", "macro_f1"}));
  app.add_option("--baseline-count", o.baseline, "Reference inference count for the budget ratio");
  app.add_option("--out", o.out, "Output directory");
  app.add_option("--units", o.units, "Unit manifest (JSON Lines)");
  app.add_option("--command", o.command, "Subprocess command line");
  app.add_option("--replay-trace", o.replay_trace, "Trace replayed by the replay driver");

  auto* estimate = app.add_subcommand("estimate", "Run the adaptive estimator and write artifacts");
  auto* simulate = app.add_subcommand("simulate", "Collect a fixed number of rounds into a trace");
  simulate->add_option("--rounds", o.rounds, "Rounds to collect");

  std::string trace_path;
  auto* quality = app.add_subcommand("quality", "Tail quality per threshold and a threshold sweep");
  quality->add_option("--trace", trace_path, "Trace file")->required();
  quality->add_option("--sweep-points", o.sweep_points, "Sweep resolution");

  std::string train_dir, test_trace;
  auto* compare = app.add_subcommand("compare", "Train/test generalization and worst-case deltas");
  compare->add_option("--train", train_dir, "Artifacts directory of the training run")->required();
  compare->add_option("--test", test_trace, "Test trace file")->required();

  std::string artifacts_dir;
  std::optional<std::size_t> top_k;
  auto* report = app.add_subcommand("report", "Regression, pairwise JSD matrix and budget report");
  report->add_option("--artifacts", artifacts_dir, "Artifacts directory")->required();
  report->add_option("--top-k", top_k, "Limit the matrix to the K largest units");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : tailq::kExitConfig;
  }

  tailq::RunConfig cfg;
  try {
    cfg = build_config(o);
  } catch (const tailq::ConfigError& e) {
    std::cerr << "tailq: config error: " << e.what() << '\n';
    return tailq::kExitConfig;
  }

  int rc = tailq::kExitOk;
  if (*estimate) {
    spdlog::info("estimate: driver={} out={}", tailq::to_string(cfg.driver.kind), cfg.out_dir);
    rc = tailq::cmd_estimate(cfg, std::cerr);
  } else if (*simulate) {
    spdlog::info("simulate: {} rounds, driver={}", cfg.rounds, tailq::to_string(cfg.driver.kind));
    rc = tailq::cmd_simulate(cfg, std::cerr);
  } else if (*quality) {
    spdlog::info("quality: trace={}", trace_path);
    rc = tailq::cmd_quality(trace_path, cfg, std::cerr);
  } else if (*compare) {
    spdlog::info("compare: train={} test={}", train_dir, test_trace);
    rc = tailq::cmd_compare(train_dir, test_trace, cfg, std::cerr);
  } else if (*report) {
    spdlog::info("report: artifacts={}", artifacts_dir);
    rc = tailq::cmd_report(artifacts_dir, cfg, top_k, std::cerr);
  }
  spdlog::debug("exit code {}", rc);
  return rc;
}
