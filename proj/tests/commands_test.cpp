#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <sstream>

#include "tailq/commands.hpp"
#include "tailq/error.hpp"
#include "test_util.hpp"

using namespace tailq;
using tailq::testing::read_file;
using tailq::testing::scratch_dir;
using tailq::testing::write_file;
namespace fs = std::filesystem;

namespace {

RunConfig small_config(const fs::path& out, std::uint64_t seed = 7) {
  RunConfig cfg;
  cfg.driver.kind = DriverKind::synthetic;
  cfg.driver.synthetic.log_mean = 2.0;
  cfg.driver.synthetic.log_stddev = 0.2;
  cfg.driver.unit_count = 6;
  cfg.estimator.initial_rounds = 10;
  cfg.estimator.max_rounds = 200;
  cfg.seed = seed;
  cfg.out_dir = out.string();
  return cfg;
}

}  // namespace

TEST_CASE("config documents") {
  RunConfig cfg;
  auto j = ojson::parse(R"({
    "driver": {"kind": "synthetic", "family": "gamma", "shape": 3.0, "unit_count": 4},
    "estimator": {"tolerance": 0.1, "window": 3},
    "context": {"system": "B"},
    "metric": "macro_f1",
    "thresholds": ["@90", "12ms"],
    "seed": 9
  })");
  apply_config_json(j, cfg);
  CHECK(cfg.driver.synthetic.family == SyntheticFamily::gamma);
  CHECK(cfg.driver.synthetic.shape == 3.0);
  CHECK(cfg.driver.unit_count == 4);
  CHECK(cfg.estimator.tolerance == 0.1);
  CHECK(cfg.estimator.window == 3);
  CHECK(cfg.estimator.refit_step == 5);
  CHECK(cfg.context.tags.at("system") == "B");
  CHECK(cfg.thresholds.size() == 2);
  CHECK(cfg.seed == 9);

  RunConfig c2;
  CHECK_THROWS_AS(apply_config_json(ojson::parse(R"({"colour": 1})"), c2), ConfigError);
  CHECK_THROWS_AS(apply_config_json(ojson::parse(R"({"driver": {"speed": 1}})"), c2), ConfigError);
  CHECK_THROWS_AS(apply_config_json(ojson::parse(R"({"estimator": {"tolerance": "x"}})"), c2), ConfigError);

  RunConfig defaults;
  CHECK(defaults.thresholds.size() == 3);
  CHECK(defaults.baseline_count == 262742);
}

TEST_CASE("generated units are stable across latency seeds") {
  RunConfig a = small_config("x", 1), b = small_config("x", 2);
  auto ua = resolve_units(a), ub = resolve_units(b);
  CHECK(ua == ub);
  CHECK(ua.front().id == "u0");
  CHECK(ua.front().size == 1.0);
  CHECK(ua.back().size == 100.0);
}

TEST_CASE("estimate writes artifacts and reruns are byte-identical") {
  auto base = scratch_dir("commands_estimate");
  std::ostringstream err;
  auto cfg = small_config(base / "nested" / "run1");
  REQUIRE(cmd_estimate(cfg, err) == kExitOk);
  for (const char* f : {"trace.jsonl", "models.json", "fit_progress.csv", "budget.json", "estimation.json"}) {
    CAPTURE(f);
    CHECK(fs::exists(base / "nested" / "run1" / f));
  }
  auto cfg2 = small_config(base / "run2");
  REQUIRE(cmd_estimate(cfg2, err) == kExitOk);
  for (const char* f : {"trace.jsonl", "models.json", "fit_progress.csv", "budget.json", "estimation.json"}) {
    CAPTURE(f);
    CHECK(read_file(base / "nested" / "run1" / f) == read_file(base / "run2" / f));
  }

  SUBCASE("quality") {
    auto qcfg = small_config(base / "quality");
    REQUIRE(cmd_quality((base / "run2" / "trace.jsonl").string(), qcfg, err) == kExitOk);
    auto q = ojson::parse(read_file(base / "quality" / "quality.json"));
    REQUIRE(q["results"].size() == 3);
    CHECK(q["results"][0]["threshold"] == "@99");
    const double w99 = q["results"][0]["worst_case"], w95 = q["results"][1]["worst_case"],
                 w90 = q["results"][2]["worst_case"];
    CHECK(w90 <= w95);
    CHECK(w95 <= w99);
    CHECK(read_file(base / "quality" / "sweep.csv").rfind("theta_ms,worst,best,origin\n", 0) == 0);

    qcfg.thresholds = {ThresholdSpec::parse("inf")};
    REQUIRE(cmd_quality((base / "run2" / "trace.jsonl").string(), qcfg, err) == kExitOk);
    auto inf = ojson::parse(read_file(base / "quality" / "quality.json"))["results"][0];
    CHECK(inf["worst_case"] == inf["origin_quality"]);
  }
  SUBCASE("compare against the identical trace") {
    auto ccfg = small_config(base / "compare");
    REQUIRE(cmd_compare((base / "run2").string(), (base / "run2" / "trace.jsonl").string(), ccfg, err) == kExitOk);
    auto c = ojson::parse(read_file(base / "compare" / "compare.json"));
    // Converged units are never refit, so later rounds leave a small drift.
    CHECK(c["generalization"]["mean_test"].get<double>() < ccfg.estimator.tolerance);
    for (const auto& row : c["delta"]) CHECK(row["delta"].get<double>() == 0.0);
  }
  SUBCASE("compare against a mismatched trace") {
    auto other = small_config(base / "other");
    other.driver.unit_count = 3;
    REQUIRE(cmd_simulate(other, err) == kExitOk);
    CHECK(cmd_compare((base / "run2").string(), (base / "other" / "trace.jsonl").string(), other, err) == kExitData);
  }
  SUBCASE("report") {
    auto rcfg = small_config(base / "report");
    REQUIRE(cmd_report((base / "run2").string(), rcfg, 3, err) == kExitOk);
    auto s = ojson::parse(read_file(base / "report" / "summary.json"));
    for (const char* k : {"estimation", "regression", "budget", "jsd_matrix"}) CHECK(s.contains(k));
    std::istringstream csv(read_file(base / "report" / "jsd_matrix.csv"));
    std::string line;
    int lines = 0;
    while (std::getline(csv, line)) {
      ++lines;
      CHECK(std::count(line.begin(), line.end(), ',') == 3);
    }
    CHECK(lines == 4);
  }
}

TEST_CASE("exit codes") {
  auto base = scratch_dir("commands_exit");
  std::ostringstream err;
  SUBCASE("tolerance out of range") {
    auto cfg = small_config(base);
    cfg.estimator.tolerance = 1.5;
    CHECK(cmd_estimate(cfg, err) == kExitConfig);
  }
  SUBCASE("empty trace") {
    write_file(base / "empty.jsonl", "");
    CHECK(cmd_quality((base / "empty.jsonl").string(), small_config(base / "q"), err) == kExitData);
  }
  SUBCASE("missing trace") { CHECK(cmd_quality((base / "nope.jsonl").string(), small_config(base / "q"), err) == kExitData); }
  SUBCASE("missing models") {
    fs::create_directories(base / "art");
    write_file(base / "art" / "trace.jsonl", "{\"id\":\"a\",\"round\":0,\"latency_ms\":1}\n");
    CHECK(cmd_report((base / "art").string(), small_config(base / "r"), std::nullopt, err) == kExitData);
    CHECK(err.str().find("models.json") != std::string::npos);
  }
  SUBCASE("subprocess failure") {
    auto cfg = small_config(base / "sub");
    cfg.driver.kind = DriverKind::subprocess;
    cfg.driver.command = {TAILQ_FAKE_MODEL, "--mode", "garbage"};
    write_file(base / "units.jsonl", "{\"id\":\"a\",\"size\":1,\"correct\":true}\n");
    cfg.driver.units_path = (base / "units.jsonl").string();
    CHECK(cmd_estimate(cfg, err) == kExitData);
  }
  SUBCASE("subprocess estimate") {
    auto cfg = small_config(base / "sub_ok");
    cfg.driver.kind = DriverKind::subprocess;
    cfg.driver.command = {TAILQ_FAKE_MODEL};
    cfg.estimator.max_rounds = 25;
    write_file(base / "units.jsonl", "{\"id\":\"a\",\"size\":1,\"correct\":true}\n{\"id\":\"b\",\"size\":2,\"correct\":false}\n");
    cfg.driver.units_path = (base / "units.jsonl").string();
    CHECK(cmd_estimate(cfg, err) == kExitOk);
    CHECK(fs::exists(base / "sub_ok" / "models.json"));
  }
}
