#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "tendon/harness/config.hpp"
#include "tendon/harness/records.hpp"

namespace tendon::harness {

struct MetricStats {
  std::string metric;
  std::size_t n = 0;  // finite values
  double mean = std::numeric_limits<double>::quiet_NaN();
  double sd = std::numeric_limits<double>::quiet_NaN();  // sample sd; 0 for n = 1
  double median = std::numeric_limits<double>::quiet_NaN();
};

struct GroupSummary {
  std::string group;
  double stiffness = 0.0;
  double babble_stiffness = 0.0;
  std::size_t runs = 0;
  std::size_t failed_runs = 0;
  double success_rate = std::numeric_limits<double>::quiet_NaN();  // locomotion only
  std::vector<MetricStats> metrics;

  const MetricStats* find(std::string_view name) const {
    for (const auto& m : metrics)
      if (m.metric == name) return &m;
    return nullptr;
  }
};

/// Across-run statistics of one detail column as a function of its index
/// column (epoch, refinement, episode).
struct CurveStats {
  std::string group;
  double stiffness = 0.0;
  std::string column;
  std::vector<double> index;
  std::vector<std::size_t> n;
  std::vector<double> mean;
  std::vector<double> sd;
};

struct Summary {
  ExperimentKind kind = ExperimentKind::task_rmse;
  std::vector<GroupSummary> groups;  // ordered like the sorted records
  std::vector<CurveStats> curves;

  const GroupSummary* group(std::string_view name) const {
    for (const auto& g : groups)
      if (g.group == name) return &g;
    return nullptr;
  }
  const CurveStats* curve(std::string_view group, std::string_view column) const {
    for (const auto& c : curves)
      if (c.group == group && c.column == column) return &c;
    return nullptr;
  }
};

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Sample standard deviation (n - 1 denominator); 0 for a single value.
inline double sample_sd(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  if (v.size() == 1) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

inline double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline MetricStats describe(std::string name, const std::vector<double>& values) {
  std::vector<double> finite;
  for (double x : values)
    if (std::isfinite(x)) finite.push_back(x);
  MetricStats s;
  s.metric = std::move(name);
  s.n = finite.size();
  s.mean = mean_of(finite);
  s.sd = sample_sd(finite);
  s.median = median_of(finite);
  return s;
}

/// Detail columns that are summarized as curves for each experiment kind.
inline std::vector<std::string> curve_columns(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::training_curves: return {"train_mse", "val_mse"};
    case ExperimentKind::adaptation: return {"rmse"};
    case ExperimentKind::locomotion_ppo: return {"reward_m", "reward_smoothed_m"};
    default: return {};
  }
}

/// Per-group statistics of every metric plus curve statistics. Records are
/// expected in their canonical sorted order.
inline Summary summarize(const std::vector<RunRecord>& records, ExperimentKind kind) {
  Summary out;
  out.kind = kind;
  std::vector<std::string> order;
  std::map<std::string, std::vector<const RunRecord*>> by_group;
  for (const auto& r : records) {
    if (!by_group.count(r.group)) order.push_back(r.group);
    by_group[r.group].push_back(&r);
  }
  const auto columns = curve_columns(kind);
  for (const auto& name : order) {
    const auto& rs = by_group[name];
    GroupSummary g;
    g.group = name;
    g.stiffness = rs.front()->stiffness;
    g.babble_stiffness = rs.front()->babble_stiffness;
    g.runs = rs.size();
    std::vector<std::string> metric_names;
    bool has_success = false;
    double successes = 0.0;
    for (const auto* r : rs) {
      if (r->failed()) ++g.failed_runs;
      for (const auto& [k, v] : r->metrics) {
        if (std::find(metric_names.begin(), metric_names.end(), k) == metric_names.end())
          metric_names.push_back(k);
        if (k == "success") {
          has_success = true;
          if (v == 1.0) successes += 1.0;
        }
      }
    }
    if (has_success) g.success_rate = successes / static_cast<double>(g.runs);
    for (const auto& m : metric_names) {
      std::vector<double> values;
      for (const auto* r : rs) values.push_back(r->metric(m));
      g.metrics.push_back(describe(m, values));
    }
    out.groups.push_back(std::move(g));

    for (const auto& col : columns) {
      std::map<double, std::vector<double>> at;
      for (const auto* r : rs) {
        const int c = r->column(col);
        if (c < 0) continue;
        for (const auto& row : r->details)
          if (std::isfinite(row[static_cast<std::size_t>(c)])) at[row[0]].push_back(row[static_cast<std::size_t>(c)]);
      }
      if (at.empty()) continue;
      CurveStats cs;
      cs.group = name;
      cs.stiffness = rs.front()->stiffness;
      cs.column = col;
      for (const auto& [idx, vals] : at) {
        cs.index.push_back(idx);
        cs.n.push_back(vals.size());
        cs.mean.push_back(mean_of(vals));
        cs.sd.push_back(sample_sd(vals));
      }
      out.curves.push_back(std::move(cs));
    }
  }
  return out;
}

}  // namespace tendon::harness
