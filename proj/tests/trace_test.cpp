#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "tailq/error.hpp"
#include "tailq/trace.hpp"
#include "test_util.hpp"

using namespace tailq;
using tailq::testing::store_from;

namespace {

TimingStore parse(const std::string& text) {
  std::istringstream in(text);
  return read_trace(in);
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("load_trace parses a 2 unit x 3 round file") {
  auto s = parse(R"({"context": {"system": "A", "framework": "pytorch"}}
{"id": "a", "round": 0, "latency_ms": 1.5, "size": 10, "correct": true}
{"id": "b", "round": 0, "latency_ms": 2.5, "size": 20, "correct": false}
{"id": "a", "round": 1, "latency_ms": 1.6, "size": 10, "correct": true}
{"id": "b", "round": 1, "latency_ms": 2.6, "size": 20, "correct": false}
{"id": "b", "round": 2, "latency_ms": 2.7, "size": 20, "correct": false}
{"id": "a", "round": 2, "latency_ms": 1.7, "size": 10, "correct": true}
)");
  CHECK(s.rounds() == 3);
  CHECK(s.unit_count() == 2);
  CHECK(s.context().tags.at("system") == "A");
  CHECK(s.latency(0, 2) == 1.7);
  CHECK(s.latency(1, 0) == 2.5);
  CHECK(s.units()[1].members[0].correct == false);
}

TEST_CASE("load_trace rejects invalid data") {
  SUBCASE("ragged rounds") {
    auto msg = error_of(R"({"id":"a","round":0,"latency_ms":1}
{"id":"a","round":1,"latency_ms":1}
{"id":"a","round":2,"latency_ms":1}
{"id":"b","round":0,"latency_ms":1}
{"id":"b","round":1,"latency_ms":1}
)");
    CHECK(msg.find("ragged rounds") != std::string::npos);
  }
  SUBCASE("gap in rounds") {
    auto msg = error_of(R"({"id":"a","round":0,"latency_ms":1}
{"id":"a","round":2,"latency_ms":1}
)");
    CHECK(msg.find("ragged rounds") != std::string::npos);
  }
  SUBCASE("non-positive latency with line number") {
    auto msg = error_of(R"({"context": {}}
{"id":"a","round":0,"latency_ms":-1.0}
)");
    CHECK(msg.find("non-positive latency") != std::string::npos);
    CHECK(msg.find("line 2") != std::string::npos);
  }
  SUBCASE("zero latency") { CHECK(error_of(R"({"id":"a","round":0,"latency_ms":0})").find("non-positive") != std::string::npos); }
  SUBCASE("malformed line") {
    auto msg = error_of("{\"id\":\"a\",\"round\":0,\"latency_ms\":1}\n{not json\n");
    CHECK(msg.find("line 2") != std::string::npos);
    CHECK(msg.find("malformed") != std::string::npos);
  }
  SUBCASE("duplicate id within a round") {
    auto msg = error_of(R"({"id":"a","round":0,"latency_ms":1}
{"id":"a","round":0,"latency_ms":2}
)");
    CHECK(msg.find("duplicate id") != std::string::npos);
  }
  SUBCASE("inconsistent metadata") {
    CHECK_THROWS_AS(parse(R"({"id":"a","round":0,"latency_ms":1,"size":1}
{"id":"a","round":1,"latency_ms":1,"size":2}
)"),
                    DataError);
  }
  SUBCASE("batch members disagree") {
    CHECK_THROWS_AS(parse(R"({"id":"a","round":0,"latency_ms":1,"batch_id":"b0"}
{"id":"b","round":0,"latency_ms":2,"batch_id":"b0"}
)"),
                    DataError);
  }
}

TEST_CASE("batches collapse into one timed unit with addressable members") {
  auto s = parse(R"({"id":"x1","round":0,"latency_ms":4,"size":2,"correct":true,"batch_id":"B"}
{"id":"x2","round":0,"latency_ms":4,"size":3,"correct":false,"batch_id":"B"}
{"id":"y","round":0,"latency_ms":1,"size":1,"correct":true}
{"id":"x1","round":1,"latency_ms":5,"size":2,"correct":true,"batch_id":"B"}
{"id":"x2","round":1,"latency_ms":5,"size":3,"correct":false,"batch_id":"B"}
{"id":"y","round":1,"latency_ms":2,"size":1,"correct":true}
)");
  REQUIRE(s.unit_count() == 2);
  CHECK(s.units()[0].id == "B");
  CHECK(s.units()[0].size == 5.0);
  CHECK(s.units()[0].members.size() == 2);
  CHECK(s.instances().size() == 3);
  CHECK(s.latency(0, 1) == 5.0);
}

TEST_CASE("append_round") {
  auto s = store_from({{1, 2, 3}, {4, 5, 6}});
  SUBCASE("full sample set increments rounds") {
    s.append_round(std::map<std::string, double>{{"u0", 7}, {"u1", 8}});
    CHECK(s.rounds() == 4);
    CHECK(s.latency(1, 3) == 8);
  }
  SUBCASE("missing id") { CHECK_THROWS_AS(s.append_round(std::map<std::string, double>{{"u0", 7}}), DataError); }
  SUBCASE("unknown id") {
    CHECK_THROWS_AS(s.append_round(std::map<std::string, double>{{"u0", 7}, {"u1", 8}, {"zz", 1}}), DataError);
  }
  SUBCASE("non-positive sample") { CHECK_THROWS_AS(s.append_round(std::vector<double>{1.0, -2.0}), DataError); }
  CHECK((s.rounds() == 3 || s.rounds() == 4));
}

TEST_CASE("pooled_latencies") {
  CHECK(store_from({{1, 3}, {2, 4}}).pooled_latencies() == std::vector<double>{1, 2, 3, 4});
  CHECK(store_from({{7}}).pooled_latencies() == std::vector<double>{7});
  CHECK_THROWS_AS(TimingStore{}.pooled_latencies(), DataError);
}

TEST_CASE("save then load is identity with bit-exact latencies") {
  std::mt19937_64 rng(11);
  std::lognormal_distribution<double> lat(0.0, 2.0);
  std::uniform_int_distribution<int> dim(1, 6);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<InstanceMeta> inst;
    const int n = dim(rng);
    for (int i = 0; i < n; ++i) {
      InstanceMeta m;
      m.id = "i" + std::to_string(i);
      m.size = std::ldexp(static_cast<double>(rng() % 1000), -3);
      if (i % 3 == 0) m.score = static_cast<double>(rng() % 100) / 99.0;
      else m.correct = (rng() & 1) != 0;
      if (i % 4 == 1) m.batch_id = "batch" + std::to_string(i / 4);
      if (i % 2 == 0) {
        m.label = "c" + std::to_string(rng() % 3);
        m.prediction = "c" + std::to_string(rng() % 3);
      }
      inst.push_back(m);
    }
    TimingStore s(RunContext{{{"model", "vit"}, {"batch_size", "1"}}}, group_units(inst));
    const int rounds = dim(rng);
    for (int r = 0; r < rounds; ++r) {
      std::vector<double> col;
      for (std::size_t u = 0; u < s.unit_count(); ++u) col.push_back(lat(rng));
      s.append_round(col);
    }
    std::stringstream buf;
    write_trace(s, buf);
    auto back = read_trace(buf);
    CHECK(back == s);
    CHECK(back.pooled_latencies().size() == back.rounds() * back.unit_count());
  }
}

TEST_CASE("unit manifests") {
  std::istringstream in(R"({"id":"a","size":3,"correct":true}
{"id":"b","size":4,"correct":false,"batch_id":"B"}
{"id":"c","size":5,"correct":true,"batch_id":"B"}
)");
  auto units = read_units(in);
  REQUIRE(units.size() == 2);
  CHECK(units[1].id == "B");
  CHECK(units[1].members.size() == 2);

  std::istringstream dup("{\"id\":\"a\"}\n{\"id\":\"a\"}\n");
  CHECK_THROWS_AS(read_units(dup), DataError);
}
