#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tailq/trace.hpp"

namespace tailq::testing {

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::path(TAILQ_TEST_TMP) / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline std::vector<TimedUnit> plain_units(std::size_t n, double size_step = 1.0, std::vector<bool> correct = {}) {
  std::vector<InstanceMeta> inst;
  for (std::size_t i = 0; i < n; ++i) {
    InstanceMeta m;
    m.id = "u" + std::to_string(i);
    m.size = size_step * static_cast<double>(i + 1);
    m.correct = correct.empty() ? true : static_cast<bool>(correct[i]);
    inst.push_back(m);
  }
  return group_units(inst);
}

// Store from a units x rounds matrix.
inline TimingStore store_from(const std::vector<std::vector<double>>& lat, std::vector<bool> correct = {}) {
  TimingStore s({}, plain_units(lat.size(), 1.0, std::move(correct)));
  const std::size_t rounds = lat.empty() ? 0 : lat.front().size();
  for (std::size_t r = 0; r < rounds; ++r) {
    std::vector<double> col;
    for (const auto& row : lat) col.push_back(row[r]);
    s.append_round(col);
  }
  return s;
}

}  // namespace tailq::testing
