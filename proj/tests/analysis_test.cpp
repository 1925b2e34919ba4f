#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "tailq/analysis.hpp"
#include "tailq/divergence.hpp"
#include "tailq/error.hpp"
#include "test_util.hpp"

using namespace tailq;
using tailq::testing::plain_units;
using tailq::testing::store_from;

namespace {

Estimation train_lognormal(std::uint64_t seed, std::size_t units) {
  SyntheticSpec spec;
  spec.log_mean = 2.0;
  spec.log_stddev = 0.2;
  spec.seed = seed;
  SyntheticDriver d(spec);
  EstimatorConfig cfg;
  return estimate(d, plain_units(units), cfg);
}

}  // namespace

TEST_CASE("ols_fit") {
  std::vector<double> x{1, 2, 3}, y{2, 4, 6};
  auto f = ols_fit(x, y);
  CHECK(f.slope == 2.0);
  CHECK(f.intercept == 0.0);
  CHECK(f.r_squared == 1.0);
  CHECK(f.points == 3);

  std::vector<double> flat{5, 5, 5};
  auto g = ols_fit(x, flat);
  CHECK(g.slope == 0.0);
  CHECK(g.r_squared == 1.0);

  std::vector<double> noisy{1, 3, 2};
  auto h = ols_fit(x, noisy);
  CHECK(h.slope == doctest::Approx(0.5));
  CHECK(h.r_squared == doctest::Approx(0.25));

  std::vector<double> same{4, 4, 4};
  CHECK_THROWS_AS(ols_fit(same, y), DataError);
  CHECK_THROWS_AS(ols_fit(std::vector<double>{1}, std::vector<double>{1}), DataError);
}

TEST_CASE("size_latency_regression uses per-unit means") {
  auto s = store_from({{1, 3}, {4, 4}, {5, 7}});  // sizes 1, 2, 3
  auto f = size_latency_regression(s);
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(0.0).epsilon(1e-12).scale(1));
}

TEST_CASE("budget") {
  auto b = budget_report(13720);
  CHECK(b.baseline == 262742);
  CHECK(b.ratio == 13720.0 / 262742.0);
  CHECK(std::abs(b.ratio - 0.0522) < 5e-5);
  CHECK(budget_report(350000).ratio > 1.0);
  CHECK(budget_report(13720, 270336).ratio == 13720.0 / 270336.0);
  CHECK_THROWS_AS(budget_report(1, 0), ConfigError);
}

TEST_CASE("generalization on identical and fresh data") {
  auto train = train_lognormal(1, 5);
  SUBCASE("identical store") {
    auto rep = generalization_report(train.result, train.store);
    CHECK(rep.mean_test < 1e-6);
    CHECK(rep.per_unit_rjsd_train.size() == 5);
    CHECK(std::isfinite(rep.mean_train));
  }
  SUBCASE("fresh rounds of the same generator") {
    SyntheticSpec spec;
    spec.log_mean = 2.0;
    spec.log_stddev = 0.2;
    spec.seed = 2;
    SyntheticDriver d(spec);
    TimingStore test({}, plain_units(5));
    for (int r = 0; r < 30; ++r) test.append_round(d.run_round(test.units()));
    auto rep = generalization_report(train.result, test);
    CHECK(rep.mean_test < 0.2);
  }
  SUBCASE("unit mismatch") {
    auto other = store_from({{1, 2}, {3, 4}});
    CHECK_THROWS_AS(generalization_report(train.result, other), DataError);
  }
}

TEST_CASE("delta table resolves on train and reuses theta") {
  auto train = store_from({{1, 2, 3, 4}, {5, 6, 7, 8}});
  auto test = store_from({{1, 2, 3, 4}, {9, 9, 9, 9}});
  std::vector<ThresholdSpec> th{ThresholdSpec::percentile(50), ThresholdSpec::parse("inf")};
  auto rows = delta_table(train, test, th, AccuracyMetric{});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].threshold_ms == 4.0);
  CHECK(rows[0].train_worst == 50.0);
  CHECK(rows[0].test_worst == 50.0);
  CHECK(rows[0].delta == 0.0);
  CHECK(rows[1].delta == 0.0);

  std::vector<ThresholdSpec> abs6{ThresholdSpec::absolute(6)};
  auto r6 = delta_table(train, test, abs6, AccuracyMetric{});
  CHECK(r6[0].train_worst == 50.0);
  CHECK(r6[0].test_worst == 50.0);
  std::vector<ThresholdSpec> abs8{ThresholdSpec::absolute(8)};
  auto r8 = delta_table(train, test, abs8, AccuracyMetric{});
  CHECK(r8[0].train_worst == 100.0);
  CHECK(r8[0].test_worst == 50.0);
  CHECK(r8[0].delta == 50.0);

  auto same = delta_table(train, train, th, AccuracyMetric{});
  for (const auto& r : same) CHECK(r.delta == 0.0);

  std::ostringstream os;
  write_delta_csv(r8, os);
  CHECK(os.str() == "threshold,theta_ms,train_worst,test_worst,delta\n8ms,8,100,50,50\n");

  CHECK_THROWS_AS(delta_table(train, store_from({{1}}), th, AccuracyMetric{}), DataError);
}

TEST_CASE("pairwise jsd matrix") {
  std::vector<DensityModel> models;
  std::vector<std::string> ids{"c", "a", "b", "d"};
  std::vector<double> sizes{3, 1, 3, 0.5};
  for (double mu : {10.0, 20.0, 30.0, 40.0}) models.push_back(fit_kde(std::vector<double>{mu - 1, mu, mu + 1.5}));
  auto m = pairwise_jsd_matrix(models, ids, sizes);
  CHECK(m.unit_ids == std::vector<std::string>{"d", "a", "b", "c"});
  for (std::size_t r = 0; r < 4; ++r) {
    CHECK(m.values[r][r] <= 1e-9);
    for (std::size_t c = 0; c < 4; ++c) CHECK(m.values[r][c] == m.values[c][r]);
  }
  CHECK(m.values[1][3] == jsd(models[1], models[0]));

  auto top = pairwise_jsd_matrix(models, ids, sizes, 2);
  CHECK(top.unit_ids == std::vector<std::string>{"b", "c"});
  CHECK(top.values.size() == 2);

  std::ostringstream os;
  write_matrix_csv(top, os);
  CHECK(os.str().rfind("unit_id,b,c\nb,0,", 0) == 0);
  CHECK_THROWS_AS(pairwise_jsd_matrix(models, ids, sizes, 1), DataError);
}
