#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tendon/core/csv.hpp"
#include "tendon/core/errors.hpp"
#include "tendon/harness/config.hpp"
#include "tendon/harness/records.hpp"
#include "tendon/harness/runner.hpp"
#include "tendon/harness/summary.hpp"
#include "tendon/harness/svg.hpp"

namespace tendon::harness {

/// Error messages end up in a CSV field, so separators and line breaks go.
inline std::string sanitize_field(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '"' || c == '\n' || c == '\r') c = c == ',' ? ';' : ' ';
  return s;
}

/// Union of metric names in first-appearance order over the sorted records.
inline std::vector<std::string> metric_names(const std::vector<RunRecord>& records) {
  std::vector<std::string> names;
  for (const auto& r : records)
    for (const auto& [k, v] : r.metrics)
      if (std::find(names.begin(), names.end(), k) == names.end()) names.push_back(k);
  return names;
}

inline void write_records_csv(std::ostream& out, const ExperimentResult& result, ExperimentKind kind) {
  CsvWriter w(out);
  const auto names = metric_names(result.records);
  std::vector<std::string> header = {"config_hash", "code_version", "kind",  "group", "stiffness",
                                     "babble_stiffness", "run", "seed", "diverged", "error"};
  header.insert(header.end(), names.begin(), names.end());
  w.header(header);
  for (const auto& r : result.records) {
    w.field(result.config_hash).field(kCodeVersion).field(to_string(kind)).field(r.group);
    w.field(r.stiffness).field(r.babble_stiffness).field(r.run);
    w.field(static_cast<unsigned long long>(r.seed)).field(r.diverged).field(sanitize_field(r.error));
    for (const auto& n : names) w.field(r.metric(n));
    w.end_row();
  }
}

/// Per-epoch, per-refinement, per-attempt or per-episode rows. Empty when
/// the experiment kind has no detail rows.
inline void write_details_csv(std::ostream& out, const ExperimentResult& result) {
  std::vector<std::string> columns;
  for (const auto& r : result.records) {
    if (!r.detail_columns.empty()) {
      columns = r.detail_columns;
      break;
    }
  }
  CsvWriter w(out);
  std::vector<std::string> header = {"group", "stiffness", "babble_stiffness", "run", "seed"};
  header.insert(header.end(), columns.begin(), columns.end());
  w.header(header);
  for (const auto& r : result.records) {
    for (const auto& row : r.details) {
      w.field(r.group).field(r.stiffness).field(r.babble_stiffness).field(r.run);
      w.field(static_cast<unsigned long long>(r.seed));
      for (std::size_t c = 0; c < columns.size(); ++c) w.field(c < row.size() ? row[c] : std::nan(""));
      w.end_row();
    }
  }
}

inline void write_summary_csv(std::ostream& out, const Summary& s) {
  CsvWriter w(out);
  w.header({"group", "stiffness", "babble_stiffness", "runs", "failed_runs", "success_rate", "metric", "n",
            "mean", "sd", "median"});
  for (const auto& g : s.groups) {
    for (const auto& m : g.metrics) {
      w.field(g.group).field(g.stiffness).field(g.babble_stiffness);
      w.field(static_cast<long long>(g.runs)).field(static_cast<long long>(g.failed_runs));
      w.field(g.success_rate).field(m.metric).field(static_cast<long long>(m.n));
      w.field(m.mean).field(m.sd).field(m.median);
      w.end_row();
    }
  }
}

inline void write_curves_csv(std::ostream& out, const Summary& s) {
  CsvWriter w(out);
  w.header({"group", "stiffness", "column", "index", "n", "mean", "sd"});
  for (const auto& c : s.curves) {
    for (std::size_t i = 0; i < c.index.size(); ++i) {
      w.field(c.group).field(c.stiffness).field(c.column).field(c.index[i]);
      w.field(static_cast<long long>(c.n[i])).field(c.mean[i]).field(c.sd[i]);
      w.end_row();
    }
  }
}

/// Wall-clock durations vary between invocations, so they live here and not
/// in any CSV.
inline Json timing_json(const ExperimentResult& result, int workers) {
  Json runs = Json::array();
  double total = 0.0;
  for (const auto& r : result.records) {
    runs.push_back({{"group", r.group}, {"run", r.run}, {"seed", r.seed}, {"wall_clock_s", r.wall_clock_s}});
    total += r.wall_clock_s;
  }
  return {{"config_hash", result.config_hash}, {"workers", workers}, {"total_run_s", total}, {"runs", runs}};
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read " + path.string());
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

/// Writes records.csv, details.csv, summary.csv, curves.csv,
/// config.resolved.json and timing.json into `dir`.
inline void write_experiment(const std::filesystem::path& dir, const ExperimentConfig& config,
                             const ExperimentResult& result, int workers) {
  std::filesystem::create_directories(dir);
  std::ostringstream rec, det, sum, cur;
  write_records_csv(rec, result, config.kind);
  write_details_csv(det, result);
  write_summary_csv(sum, result.summary);
  write_curves_csv(cur, result.summary);
  write_text(dir / "records.csv", rec.str());
  write_text(dir / "details.csv", det.str());
  write_text(dir / "summary.csv", sum.str());
  write_text(dir / "curves.csv", cur.str());
  write_text(dir / "config.resolved.json", to_json(config).dump(2) + "\n");
  write_text(dir / "timing.json", timing_json(result, workers).dump(2) + "\n");
}

namespace detail {

inline double parse_number(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw ConfigError("bad number: " + s);
    return v;
  } catch (const std::logic_error&) {
    throw ConfigError("bad number: " + s);
  }
}

inline std::vector<std::vector<std::string>> read_csv_rows(const std::string& text,
                                                           const std::vector<std::string>& expected) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) != expected) throw ConfigError("unexpected CSV header");
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != expected.size()) throw ConfigError("CSV row has wrong field count");
    rows.push_back(std::move(f));
  }
  return rows;
}

}  // namespace detail

/// Rebuilds a Summary from summary.csv and curves.csv text.
inline Summary read_summary(const std::string& summary_csv, const std::string& curves_csv, ExperimentKind kind) {
  Summary s;
  s.kind = kind;
  using detail::parse_number;
  for (const auto& f : detail::read_csv_rows(summary_csv, {"group", "stiffness", "babble_stiffness", "runs",
                                                           "failed_runs", "success_rate", "metric", "n", "mean",
                                                           "sd", "median"})) {
    if (s.groups.empty() || s.groups.back().group != f[0]) {
      GroupSummary g;
      g.group = f[0];
      g.stiffness = parse_number(f[1]);
      g.babble_stiffness = parse_number(f[2]);
      g.runs = static_cast<std::size_t>(parse_number(f[3]));
      g.failed_runs = static_cast<std::size_t>(parse_number(f[4]));
      g.success_rate = parse_number(f[5]);
      s.groups.push_back(std::move(g));
    }
    s.groups.back().metrics.push_back({f[6], static_cast<std::size_t>(parse_number(f[7])), parse_number(f[8]),
                                       parse_number(f[9]), parse_number(f[10])});
  }
  for (const auto& f : detail::read_csv_rows(curves_csv, {"group", "stiffness", "column", "index", "n", "mean", "sd"})) {
    if (s.curves.empty() || s.curves.back().group != f[0] || s.curves.back().column != f[2]) {
      CurveStats c;
      c.group = f[0];
      c.stiffness = parse_number(f[1]);
      c.column = f[2];
      s.curves.push_back(std::move(c));
    }
    auto& c = s.curves.back();
    c.index.push_back(parse_number(f[3]));
    c.n.push_back(static_cast<std::size_t>(parse_number(f[4])));
    c.mean.push_back(parse_number(f[5]));
    c.sd.push_back(parse_number(f[6]));
  }
  return s;
}

namespace detail {

inline std::string stiffness_label(const GroupSummary& g) { return g.group + " N/m"; }

inline BarChart metric_bars(const Summary& s, const std::string& title, const std::string& y_label,
                            const std::vector<std::pair<std::string, std::string>>& metrics) {
  BarChart chart{title, "stiffness (N/m)", y_label, {}, {}};
  for (const auto& g : s.groups) chart.categories.push_back(g.group);
  for (const auto& [metric, label] : metrics) {
    BarSeries series{label, {}, {}};
    for (const auto& g : s.groups) {
      const MetricStats* m = g.find(metric);
      series.values.push_back(m ? m->mean : std::nan(""));
      series.sd.push_back(m ? m->sd : std::nan(""));
    }
    chart.series.push_back(std::move(series));
  }
  return chart;
}

inline LineChart curve_lines(const Summary& s, const std::string& column, const std::string& title,
                             const std::string& x_label, const std::string& y_label) {
  LineChart chart{title, x_label, y_label, {}};
  for (const auto& g : s.groups) {
    const CurveStats* c = s.curve(g.group, column);
    if (!c) continue;
    const bool by_stiffness = s.kind != ExperimentKind::adaptation;
    chart.series.push_back({by_stiffness ? stiffness_label(g) : g.group, c->index, c->mean, c->sd});
  }
  return chart;
}

}  // namespace detail

/// SVG documents for one experiment as (file name, document) pairs. Bars and
/// curves show the across-run mean; whiskers and shades span one standard
/// deviation end to end. An empty summary yields the same files drawn as
/// empty axes labelled "no data".
inline std::vector<std::pair<std::string, std::string>> emit_plots(const Summary& s, ExperimentKind kind) {
  using detail::curve_lines;
  using detail::metric_bars;
  std::vector<std::pair<std::string, std::string>> out;
  switch (kind) {
    case ExperimentKind::training_curves:
      out.emplace_back("train_mse.svg",
                       render_line_chart(curve_lines(s, "train_mse", "Training error", "epoch", "train MSE")));
      out.emplace_back("val_mse.svg",
                       render_line_chart(curve_lines(s, "val_mse", "Validation error", "epoch", "validation MSE")));
      break;
    case ExperimentKind::task_rmse:
      out.emplace_back("cyclical_rmse.svg",
                       render_bar_chart(metric_bars(s, "Cyclical task RMSE", "RMSE (rad)",
                                                    {{"cyclical_rmse_q1", "joint 1"}, {"cyclical_rmse_q2", "joint 2"}})));
      out.emplace_back("p2p_rmse.svg",
                       render_bar_chart(metric_bars(s, "Point-to-point task RMSE", "RMSE (rad)",
                                                    {{"p2p_rmse_q1", "joint 1"}, {"p2p_rmse_q2", "joint 2"}})));
      break;
    case ExperimentKind::adaptation:
      out.emplace_back("adaptation_rmse.svg",
                       render_line_chart(curve_lines(s, "rmse", "RMSE over refinements", "refinement", "RMSE (rad)")));
      break;
    case ExperimentKind::locomotion_g2p: {
      BarChart success{"Locomotion success rate", "stiffness (N/m)", "success rate", {}, {{"success rate", {}, {}}}};
      for (const auto& g : s.groups) {
        success.categories.push_back(g.group);
        success.series[0].values.push_back(g.success_rate);
      }
      out.emplace_back("success_rate.svg", render_bar_chart(success));
      out.emplace_back("final_reward.svg",
                       render_bar_chart(metric_bars(s, "Final attempt reward", "distance (m)",
                                                    {{"final_reward_m", "final reward"}})));
      out.emplace_back("final_energy.svg",
                       render_bar_chart(metric_bars(s, "Final attempt energy", "sum of squared activations",
                                                    {{"final_energy", "energy"}})));
      out.emplace_back("attempts_used.svg",
                       render_bar_chart(metric_bars(s, "Attempts used", "attempts", {{"attempts_used", "attempts"}})));
      break;
    }
    case ExperimentKind::locomotion_ppo:
      out.emplace_back("reward_curves.svg",
                       render_line_chart(curve_lines(s, "reward_smoothed_m", "Smoothed episode reward", "episode",
                                                     "distance (m)")));
      out.emplace_back("final_reward.svg",
                       render_bar_chart(metric_bars(s, "Final smoothed reward", "distance (m)",
                                                    {{"final_smoothed_reward_m", "smoothed reward"}})));
      break;
  }
  return out;
}

}  // namespace tendon::harness
