#include "tailq/trace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "tailq/error.hpp"

namespace tailq {

using nlohmann::json;
using nlohmann::ordered_json;

double InstanceMeta::payload() const {
  if (correct) return *correct ? 1.0 : 0.0;
  if (score) return *score;
  throw DataError("instance '" + id + "' has no correctness payload");
}

void RunContext::validate() const {
  for (const auto& [key, value] : tags) {
    if (key.empty()) throw DataError("run context tag keys must be nonempty");
  }
}

void check_latency(double v) {
  if (!std::isfinite(v) || v <= 0.0) {
    std::ostringstream os;
    os << "non-positive latency " << v;
    throw DataError(os.str());
  }
}

TimingStore::TimingStore(RunContext context, std::vector<TimedUnit> units)
    : context_(std::move(context)), units_(std::move(units)), latencies_(units_.size()) {
  context_.validate();
  std::unordered_set<std::string> seen;
  for (const auto& u : units_) {
    if (u.members.empty()) throw DataError("unit '" + u.id + "' has no member instances");
    if (!seen.insert(u.id).second) throw DataError("duplicate id '" + u.id + "'");
    if (!(u.size >= 0.0)) throw DataError("unit '" + u.id + "' has negative size");
  }
}

std::optional<std::size_t> TimingStore::find_unit(const std::string& id) const {
  for (std::size_t i = 0; i < units_.size(); ++i) {
    if (units_[i].id == id) return i;
  }
  return std::nullopt;
}

std::vector<InstanceMeta> TimingStore::instances(std::vector<std::size_t>* owner) const {
  std::vector<InstanceMeta> out;
  if (owner) owner->clear();
  for (std::size_t u = 0; u < units_.size(); ++u) {
    for (const auto& m : units_[u].members) {
      out.push_back(m);
      if (owner) owner->push_back(u);
    }
  }
  return out;
}

void TimingStore::append_round(std::span<const double> samples) {
  if (samples.size() != units_.size()) {
    throw DataError("round has " + std::to_string(samples.size()) + " samples for " +
                    std::to_string(units_.size()) + " units");
  }
  for (double v : samples) check_latency(v);
  for (std::size_t i = 0; i < units_.size(); ++i) latencies_[i].push_back(samples[i]);
  ++rounds_;
}

void TimingStore::append_round(const std::map<std::string, double>& samples) {
  std::vector<double> aligned(units_.size());
  for (const auto& [id, v] : samples) {
    if (!find_unit(id)) throw DataError("sample for unknown unit id '" + id + "'");
  }
  for (std::size_t i = 0; i < units_.size(); ++i) {
    auto it = samples.find(units_[i].id);
    if (it == samples.end()) throw DataError("round is missing unit id '" + units_[i].id + "'");
    aligned[i] = it->second;
  }
  append_round(aligned);
}

std::vector<double> TimingStore::pooled_latencies() const {
  if (empty()) throw DataError("empty store");
  std::vector<double> all;
  all.reserve(units_.size() * rounds_);
  for (const auto& row : latencies_) all.insert(all.end(), row.begin(), row.end());
  std::sort(all.begin(), all.end());
  return all;
}

std::vector<TimedUnit> group_units(const std::vector<InstanceMeta>& instances) {
  std::vector<TimedUnit> units;
  std::unordered_map<std::string, std::size_t> batch_index;
  for (const auto& inst : instances) {
    if (!inst.batch_id) {
      units.push_back(TimedUnit{inst.id, inst.size, {inst}});
      continue;
    }
    auto [it, inserted] = batch_index.try_emplace(*inst.batch_id, units.size());
    if (inserted) {
      units.push_back(TimedUnit{*inst.batch_id, 0.0, {}});
    }
    auto& unit = units[it->second];
    unit.members.push_back(inst);
    unit.size += inst.size;
  }
  return units;
}

namespace {

[[noreturn]] void fail_line(std::size_t line, const std::string& what) {
  throw DataError("line " + std::to_string(line) + ": " + what);
}

std::optional<std::string> opt_string(const json& rec, const char* key, std::size_t line) {
  auto it = rec.find(key);
  if (it == rec.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) fail_line(line, std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

// Parses the per-instance fields shared by trace records and unit manifests.
InstanceMeta parse_instance(const json& rec, std::size_t line) {
  InstanceMeta m;
  auto id = rec.find("id");
  if (id == rec.end() || !id->is_string()) fail_line(line, "missing string field 'id'");
  m.id = id->get<std::string>();
  if (m.id.empty()) fail_line(line, "empty id");
  if (auto it = rec.find("size"); it != rec.end()) {
    if (!it->is_number()) fail_line(line, "field 'size' must be a number");
    m.size = it->get<double>();
    if (!(m.size >= 0.0) || !std::isfinite(m.size)) fail_line(line, "negative size");
  }
  if (auto it = rec.find("correct"); it != rec.end() && !it->is_null()) {
    if (!it->is_boolean()) fail_line(line, "field 'correct' must be a boolean");
    m.correct = it->get<bool>();
  }
  if (auto it = rec.find("score"); it != rec.end() && !it->is_null()) {
    if (!it->is_number()) fail_line(line, "field 'score' must be a number");
    m.score = it->get<double>();
    if (!(*m.score >= 0.0 && *m.score <= 1.0)) fail_line(line, "score outside [0,1]");
  }
  m.batch_id = opt_string(rec, "batch_id", line);
  m.label = opt_string(rec, "label", line);
  m.prediction = opt_string(rec, "prediction", line);
  return m;
}

json parse_line(const std::string& text, std::size_t line) {
  json rec;
  try {
    rec = json::parse(text);
  } catch (const json::parse_error& e) {
    fail_line(line, std::string("malformed line: ") + e.what());
  }
  if (!rec.is_object()) fail_line(line, "malformed line: record is not an object");
  return rec;
}

bool is_blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

RunContext parse_context(const json& header, std::size_t line) {
  const auto& ctx = header.at("context");
  if (!ctx.is_object()) fail_line(line, "'context' must be an object");
  RunContext out;
  for (const auto& [key, value] : ctx.items()) {
    if (key.empty()) fail_line(line, "empty context tag key");
    out.tags[key] = value.is_string() ? value.get<std::string>() : value.dump();
  }
  return out;
}

void put_payload(ordered_json& rec, const InstanceMeta& m) {
  rec["size"] = m.size;
  if (m.correct) rec["correct"] = *m.correct;
  if (m.score) rec["score"] = *m.score;
  if (m.batch_id) rec["batch_id"] = *m.batch_id;
  if (m.label) rec["label"] = *m.label;
  if (m.prediction) rec["prediction"] = *m.prediction;
}

}  // namespace

TimingStore read_trace(std::istream& in) {
  RunContext context;
  std::vector<InstanceMeta> instances;
  std::unordered_map<std::string, std::size_t> index;
  std::vector<std::map<std::size_t, double>> samples;

  std::string text;
  std::size_t line = 0;
  bool first_record = true;
  while (std::getline(in, text)) {
    ++line;
    if (is_blank(text)) continue;
    json rec = parse_line(text, line);
    if (first_record && rec.contains("context") && !rec.contains("id")) {
      context = parse_context(rec, line);
      first_record = false;
      continue;
    }
    first_record = false;

    InstanceMeta meta = parse_instance(rec, line);
    auto round_it = rec.find("round");
    if (round_it == rec.end() || !round_it->is_number_integer() || round_it->get<long long>() < 0) {
      fail_line(line, "field 'round' must be an integer >= 0");
    }
    auto round = static_cast<std::size_t>(round_it->get<long long>());
    auto lat_it = rec.find("latency_ms");
    if (lat_it == rec.end() || !lat_it->is_number()) fail_line(line, "missing numeric field 'latency_ms'");
    double latency = lat_it->get<double>();
    try {
      check_latency(latency);
    } catch (const DataError& e) {
      fail_line(line, e.what());
    }

    auto [it, inserted] = index.try_emplace(meta.id, instances.size());
    if (inserted) {
      instances.push_back(meta);
      samples.emplace_back();
    } else if (!(instances[it->second] == meta)) {
      fail_line(line, "inconsistent metadata for id '" + meta.id + "'");
    }
    if (!samples[it->second].emplace(round, latency).second) {
      fail_line(line, "duplicate id '" + meta.id + "' in round " + std::to_string(round));
    }
  }

  auto units = group_units(instances);
  // A batch id must not shadow a standalone instance id.
  for (const auto& u : units) {
    if (u.members.front().batch_id && index.count(u.id)) {
      throw DataError("duplicate id '" + u.id + "': batch id collides with an instance id");
    }
  }

  TimingStore store(std::move(context), units);
  std::size_t rounds = 0;
  std::vector<std::vector<double>> per_unit(units.size());
  for (std::size_t u = 0; u < units.size(); ++u) {
    const auto& first = samples[index.at(units[u].members.front().id)];
    for (const auto& m : units[u].members) {
      const auto& own = samples[index.at(m.id)];
      if (own.size() != first.size()) {
        throw DataError("ragged rounds: batch '" + units[u].id + "' members have different round counts");
      }
      for (const auto& [r, v] : own) {
        auto f = first.find(r);
        if (f == first.end() || f->second != v) {
          throw DataError("batch '" + units[u].id + "' members disagree on round " + std::to_string(r));
        }
      }
    }
    std::size_t expect = 0;
    for (const auto& [r, v] : first) {
      if (r != expect) {
        throw DataError("ragged rounds: unit '" + units[u].id + "' is missing round " + std::to_string(expect));
      }
      per_unit[u].push_back(v);
      ++expect;
    }
    if (u == 0) {
      rounds = per_unit[u].size();
    } else if (per_unit[u].size() != rounds) {
      throw DataError("ragged rounds: unit '" + units[u].id + "' has " + std::to_string(per_unit[u].size()) +
                      " samples, unit '" + units[0].id + "' has " + std::to_string(rounds));
    }
  }

  std::vector<double> column(units.size());
  for (std::size_t r = 0; r < rounds; ++r) {
    for (std::size_t u = 0; u < units.size(); ++u) column[u] = per_unit[u][r];
    store.append_round(column);
  }
  return store;
}

TimingStore load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open trace file '" + path + "'");
  return read_trace(in);
}

void write_trace(const TimingStore& store, std::ostream& out) {
  ordered_json header;
  header["context"] = ordered_json::object();
  for (const auto& [k, v] : store.context().tags) header["context"][k] = v;
  out << header.dump() << '\n';
  for (std::size_t r = 0; r < store.rounds(); ++r) {
    for (std::size_t u = 0; u < store.unit_count(); ++u) {
      for (const auto& m : store.units()[u].members) {
        ordered_json rec;
        rec["id"] = m.id;
        rec["round"] = r;
        rec["latency_ms"] = store.latency(u, r);
        put_payload(rec, m);
        out << rec.dump() << '\n';
      }
    }
  }
}

void save_trace(const TimingStore& store, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write trace file '" + path + "'");
  write_trace(store, out);
  if (!out) throw DataError("failed writing trace file '" + path + "'");
}

std::vector<TimedUnit> read_units(std::istream& in) {
  std::vector<InstanceMeta> instances;
  std::unordered_set<std::string> ids;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (is_blank(text)) continue;
    json rec = parse_line(text, line);
    if (rec.contains("context") && !rec.contains("id")) continue;
    InstanceMeta meta = parse_instance(rec, line);
    if (!ids.insert(meta.id).second) fail_line(line, "duplicate id '" + meta.id + "'");
    instances.push_back(std::move(meta));
  }
  auto units = group_units(instances);
  for (const auto& u : units) {
    if (u.members.front().batch_id && ids.count(u.id)) {
      throw DataError("duplicate id '" + u.id + "': batch id collides with an instance id");
    }
  }
  return units;
}

std::vector<TimedUnit> load_units(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open units file '" + path + "'");
  return read_units(in);
}

}  // namespace tailq
