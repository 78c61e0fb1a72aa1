#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tendon::harness {

/// Result of one (stiffness, seed) run. `details` holds the per-epoch,
/// per-refinement, per-attempt or per-episode rows of the run.
struct RunRecord {
  std::string group;  // stiffness label, or the adaptation series name
  double stiffness = 0.0;         // N/m the task ran at
  double babble_stiffness = 0.0;  // N/m the map was babbled at
  int run = 0;
  std::uint64_t seed = 0;
  bool diverged = false;
  std::string error;
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<std::string> detail_columns;
  std::vector<std::vector<double>> details;
  double wall_clock_s = 0.0;  // reported separately; never part of the CSV output
  std::string model;          // serialized map or policy, when requested

  void set(std::string name, double value) {
    for (auto& [k, v] : metrics) {
      if (k == name) {
        v = value;
        return;
      }
    }
    metrics.emplace_back(std::move(name), value);
  }

  double metric(std::string_view name) const {
    for (const auto& [k, v] : metrics)
      if (k == name) return v;
    return std::numeric_limits<double>::quiet_NaN();
  }

  /// Index of a detail column, or -1.
  int column(std::string_view name) const {
    for (std::size_t i = 0; i < detail_columns.size(); ++i)
      if (detail_columns[i] == name) return static_cast<int>(i);
    return -1;
  }

  bool failed() const noexcept { return diverged || !error.empty(); }
};

}  // namespace tendon::harness
