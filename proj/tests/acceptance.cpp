// Acceptance run: one PASS/FAIL line per criterion on stdout, progress on
// stderr. Exits 0 once every criterion has been evaluated; a nonzero exit
// means the harness itself broke.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "suites.hpp"
#include "tendon/g2p/babble.hpp"
#include "tendon/g2p/inverse_map.hpp"
#include "tendon/g2p/locomotion.hpp"
#include "tendon/g2p/tasks.hpp"
#include "tendon/harness/report.hpp"
#include "tendon/harness/runner.hpp"
#include "tendon/tasks/metrics.hpp"
#include "tendon/tasks/reference.hpp"

namespace fs = std::filesystem;
using namespace tendon;
using namespace tendon::harness;

namespace {

const std::vector<double> kMid = {2000, 5000, 7000};

struct Outcome {
  bool pass = false;
  std::string detail;
};

nlohmann::json g_log = nlohmann::json::object();

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void progress(const RunRecord& r) {
  std::fprintf(stderr, "    %-8s run %2d %s %.1fs\n", r.group.c_str(), r.run,
               r.diverged ? "diverged" : (r.error.empty() ? "ok" : r.error.c_str()), r.wall_clock_s);
}

ExperimentResult run(const ExperimentConfig& c) {
  std::fprintf(stderr, "  %s: %zu jobs\n", std::string(to_string(c.kind)).c_str(), plan_jobs(c).size());
  return run_experiment(c, 1, progress);
}

std::vector<const RunRecord*> records_at(const ExperimentResult& r, const std::vector<double>& ks) {
  std::vector<const RunRecord*> out;
  for (const auto& rec : r.records)
    if (std::find(ks.begin(), ks.end(), rec.stiffness) != ks.end()) out.push_back(&rec);
  return out;
}

double median_metric(const std::vector<const RunRecord*>& rs, const std::string& metric) {
  std::vector<double> v;
  for (const auto* r : rs)
    if (std::isfinite(r->metric(metric))) v.push_back(r->metric(metric));
  return median_of(v);
}

Outcome physics_invariants() {
  const auto t0 = std::chrono::steady_clock::now();
  const suites::SuiteResult r[] = {suites::mass_matrix_suite(1000, 101), suites::skew_suite(1000, 102),
                                   suites::tension_suite(1000, 103), suites::passive_energy_suite(1000, 104)};
  const double t = seconds_since(t0);
  int failures = 0;
  double worst = 0.0;
  for (const auto& s : r) {
    failures += s.failures;
    worst = std::max(worst, s.worst);
  }
  return {failures == 0 && t < 30.0,
          "4x1000 cases, failures " + std::to_string(failures) + ", " + fmt("%.1f s", t) + fmt(", worst statistic %.3g", worst)};
}

Outcome gradients() {
  const auto bp = suites::backprop_suite(20, 201);
  const auto gae = suites::gae_suite(1000, 202);
  const auto ppo = suites::ppo_surrogate_suite(100, 203);
  const int f = bp.failures + gae.failures + ppo.failures;
  return {f == 0, "backprop " + std::to_string(bp.failures) + "/20, gae " + std::to_string(gae.failures) +
                      "/1000, surrogate " + std::to_string(ppo.failures) + "/100 failures"};
}

Outcome protocol_counts() {
  const LimbParams limb = default_limb(2000);
  const g2p::BabbleLog log = g2p::motor_babble(limb, 180.0, 11);
  const auto cyc = g2p::default_cyclical(g2p::TaskSettings{}, limb);
  const auto p2p = tasks::p2p_reference(12, 10, 3.0, limb.joint_limits);
  const g2p::InverseMap map = g2p::build_inverse_map(log, 13, nets::TrainOptions{});
  const SceneParams scene;
  Rng rng(14);
  const auto explore =
      tasks::exploration_reference(tasks::sample_exploration_ellipse(rng, limb.joint_limits, 1.3), 10);
  const auto attempt =
      g2p::run_scene_task(map, explore, scene, limb, g2p::settled_scene_state(scene, limb, 1.0));
  tasks::RowMatrix desired = tasks::RowMatrix::Zero(3000, 2), realized = desired;
  realized.topRows(750).setConstant(1.0);
  const Vec2 washout = tasks::rmse(realized, desired, 0.25);
  const bool ok = log.size() == 18000 && cyc.size() == 3000 && p2p.size() == 3000 &&
                  attempt.realized.rows() == 1300 && washout == Vec2::Zero();
  std::ostringstream d;
  d << "babble " << log.size() << ", cyclical " << cyc.size() << ", p2p " << p2p.size() << ", attempt "
    << attempt.realized.rows() << ", washout rmse " << washout[0] << "," << washout[1];
  return {ok, d.str()};
}

Outcome training_pattern() {
  ExperimentConfig c;
  c.kind = ExperimentKind::training_curves;
  c.stiffness_list = {0, 10000};
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentResult r = run(c);
  const double t = seconds_since(t0);
  const auto* soft = r.summary.group("0");
  const auto* stiff = r.summary.group("10000");
  const double e1_0 = soft->find("epoch1_train_mse")->mean, e1_k = stiff->find("epoch1_train_mse")->mean;
  const double ef_0 = soft->find("final_train_mse")->mean, ef_k = stiff->find("final_train_mse")->mean;
  g_log["4"] = {{"epoch1", {e1_0, e1_k}}, {"final", {ef_0, ef_k}}, {"seconds", t}};
  std::ostringstream d;
  d << "epoch-1 mean MSE K=0 " << fmt("%.5f", e1_0) << " vs K=1e4 " << fmt("%.5f", e1_k)
    << "; epoch-20 K=0 " << fmt("%.5f", ef_0) << " vs K=1e4 " << fmt("%.5f", ef_k) << "; " << fmt("%.0f s", t);
  return {e1_k > e1_0 && ef_k < ef_0 && t < 600.0 && !r.any_failed(), d.str()};
}

Outcome task_pattern() {
  ExperimentConfig c;
  c.kind = ExperimentKind::task_rmse;
  c.stiffness_list = {0, 2000, 5000, 10000, 100000};
  const ExperimentResult r = run(c);
  bool lower = true;
  std::ostringstream d;
  std::map<std::string, double> improvement;
  for (const std::string task : {"cyclical", "p2p"}) {
    const std::string m = task + "_rmse";
    const double at0 = median_metric(records_at(r, {0}), m);
    const double at_hi = median_metric(records_at(r, {100000}), m);
    double mid_sum = 0.0;
    d << task << " median RMSE";
    for (double k : {0.0, 2000.0, 5000.0, 10000.0, 100000.0}) {
      const double v = median_metric(records_at(r, {k}), m);
      d << " " << format_double(k) << ":" << fmt("%.4f", v);
      g_log["5"][m].push_back(v);
      if (k > 0 && k < 100000) {
        lower = lower && v < at0 && v < at_hi;
        mid_sum += v;
      }
    }
    improvement[task] = 1.0 - (mid_sum / 3.0) / at0;
    d << "; improvement " << fmt("%.3f", improvement[task]) << "; ";
  }
  const bool p2p_larger = improvement["p2p"] > improvement["cyclical"];
  d << "mid below extremes " << (lower ? "yes" : "no") << ", p2p gain larger " << (p2p_larger ? "yes" : "no");
  return {lower && p2p_larger, d.str()};
}

Outcome adaptation_pattern() {
  ExperimentConfig c;
  c.kind = ExperimentKind::adaptation;
  const ExperimentResult r = run(c);
  std::map<std::string, std::vector<const RunRecord*>> by;
  for (const auto& rec : r.records) by[rec.group].push_back(&rec);
  const double ab0 = median_metric(by["A_B"], "rmse_initial");
  const double ab5 = median_metric(by["A_B"], "rmse_final");
  const double bb5 = median_metric(by["B_B"], "rmse_final");
  const double gap = std::abs(ab5 - bb5) / bb5;
  g_log["6"] = {{"A_B_initial", ab0}, {"A_B_final", ab5}, {"B_B_final", bb5},
                {"A_A_final", median_metric(by["A_A"], "rmse_final")},
                {"B_A_final", median_metric(by["B_A"], "rmse_final")}};
  std::ostringstream d;
  d << "A->B median RMSE refinement 0 " << fmt("%.4f", ab0) << ", refinement 5 " << fmt("%.4f", ab5)
    << "; B->B refinement 5 " << fmt("%.4f", bb5) << " (gap " << fmt("%.1f%%", 100 * gap) << ")";
  return {gap <= 0.25 && ab0 > ab5, d.str()};
}

Outcome locomotion_pattern() {
  ExperimentConfig c;
  c.kind = ExperimentKind::locomotion_g2p;
  c.stiffness_list = {0, 2000, 5000, 7000, 100000};
  const ExperimentResult r = run(c);
  std::ostringstream d;
  bool mid_ok = true;
  double mid_min = 1.0;
  d << "success rate";
  for (double k : c.stiffness_list) {
    const double rate = r.summary.group(format_double(k))->success_rate;
    d << " " << format_double(k) << ":" << fmt("%.1f", rate);
    g_log["7"]["success_rate"].push_back(rate);
    if (std::find(kMid.begin(), kMid.end(), k) != kMid.end()) {
      mid_ok = mid_ok && rate >= 0.8;
      mid_min = std::min(mid_min, rate);
    }
  }
  const double stiff_rate = r.summary.group("100000")->success_rate;
  const double e_mid = median_metric(records_at(r, kMid), "final_energy");
  const double e0 = median_metric(records_at(r, {0}), "final_energy");
  g_log["7"]["final_energy_mid"] = e_mid;
  g_log["7"]["final_energy_0"] = e0;
  d << "; median final energy mid " << fmt("%.1f", e_mid) << " vs K=0 " << fmt("%.1f", e0);
  return {mid_ok && stiff_rate < mid_min && e_mid < e0, d.str()};
}

Outcome ppo_pattern() {
  ExperimentConfig c;
  c.kind = ExperimentKind::locomotion_ppo;
  c.stiffness_list = {0, 2000, 5000, 7000, 100000};
  const ExperimentResult r = run(c);
  const int episodes = c.ppo.episodes;

  // Cap: median of the mid-range runs' best smoothed reward, so at least
  // half of them reach it.
  auto smoothed = [](const RunRecord* rec) {
    std::vector<double> s;
    const int col = rec->column("reward_smoothed_m");
    if (col >= 0)
      for (const auto& row : rec->details) s.push_back(row[static_cast<std::size_t>(col)]);
    return s;
  };
  std::vector<double> best;
  for (const auto* rec : records_at(r, kMid)) {
    const auto s = smoothed(rec);
    if (!s.empty()) best.push_back(*std::max_element(s.begin(), s.end()));
  }
  const double cap = median_of(best);
  auto first_past = [&](const std::vector<double>& ks) {
    std::vector<double> v;
    for (const auto* rec : records_at(r, ks)) {
      const long i = tasks::first_index_reaching(smoothed(rec), cap);
      v.push_back(i >= 0 ? static_cast<double>(i) : static_cast<double>(episodes));
    }
    return median_of(v);
  };
  const double f_mid = median_metric(records_at(r, kMid), "final_smoothed_reward_m");
  const double f0 = median_metric(records_at(r, {0}), "final_smoothed_reward_m");
  const double f_hi = median_metric(records_at(r, {100000}), "final_smoothed_reward_m");
  const double p_mid = first_past(kMid), p0 = first_past({0}), p_hi = first_past({100000});
  g_log["8"] = {{"final_smoothed", {f0, f_mid, f_hi}}, {"cap", cap}, {"first_past_cap", {p0, p_mid, p_hi}}};
  std::ostringstream d;
  d << "median final smoothed reward K=0 " << fmt("%.3f", f0) << ", mid " << fmt("%.3f", f_mid) << ", K=1e5 "
    << fmt("%.3f", f_hi) << "; cap " << fmt("%.3f m", cap) << ", median first episode past cap K=0 "
    << fmt("%.0f", p0) << ", mid " << fmt("%.0f", p_mid) << ", K=1e5 " << fmt("%.0f", p_hi);
  return {f_mid > f0 && f_mid > f_hi && p_mid < p0 && p_mid < p_hi, d.str()};
}

// Reads every regular file under `dir` with one of the extensions.
std::map<std::string, std::string> collect(const fs::path& dir, const std::vector<std::string>& exts) {
  std::map<std::string, std::string> out;
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string ext = e.path().extension().string();
    if (std::find(exts.begin(), exts.end(), ext) != exts.end())
      out[fs::relative(e.path(), dir).string()] = read_text(e.path());
  }
  return out;
}

int shell(const std::string& cmd) {
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

Outcome cli_determinism(const std::string& cli, const fs::path& work) {
  const fs::path dir = work / "determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  nlohmann::json config = {{"stiffness_list", {0.0, 5000.0}},
                           {"monte_carlo_runs", 2},
                           {"task", {{"babble_duration_s", 10.0}, {"cyclical_cycles", 3.0}, {"p2p_points", 3}}},
                           {"train", {{"epochs", 3}}},
                           {"adaptation", {{"refinements", 2}}},
                           {"locomotion", {{"max_attempts", 3}}},
                           {"ppo", {{"episodes", 3}, {"steps_per_episode", 200}, {"update_epochs", 2}}}};
  write_text(dir / "config.json", config.dump(2));
  const std::string base = "\"" + cli + "\" --config \"" + (dir / "config.json").string() + "\"";
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"babble", "babble"},
      {"train-map", "train-map"},
      {"task", "task --task both --export-references"},
      {"adapt", "adapt"},
      {"locomote-g2p", "locomote-g2p"},
      {"locomote-ppo", "locomote-ppo --save-policies"},
      {"sweep", "sweep --kind task_rmse"}};
  std::ostringstream d;
  bool ok = true;
  int compared = 0;
  for (const auto& [name, args] : commands) {
    std::vector<std::map<std::string, std::string>> outputs;
    for (const auto& [tag, workers] : {std::pair{"a", 1}, std::pair{"b", 1}, std::pair{"c", 8}}) {
      const fs::path out = dir / (name + "_" + tag);
      const int rc = shell(base + " --workers " + std::to_string(workers) + " --out-dir \"" + out.string() +
                           "\" " + args + " 2>\"" + (dir / (name + "_" + tag + ".log")).string() + "\"");
      if (rc != 0) {
        ok = false;
        d << name << " exit " << rc << "; ";
      }
      outputs.push_back(collect(out, {".csv", ".json", ".svg"}));
      // These two legitimately name the output directory or hold wall-clock times.
      outputs.back().erase("timing.json");
      outputs.back().erase("config.resolved.json");
    }
    if (outputs[0].empty() || outputs[0] != outputs[1] || outputs[0] != outputs[2]) {
      ok = false;
      d << name << " outputs differ; ";
    }
    compared += static_cast<int>(outputs[0].size());
    if (name == "train-map") {
      // plot re-renders from the CSVs of a finished run.
      std::vector<std::map<std::string, std::string>> plots;
      for (const char* tag : {"a", "b"}) {
        const fs::path out = dir / (std::string("plot_") + tag);
        const int rc = shell("\"" + cli + "\" --out-dir \"" + out.string() + "\" plot --in \"" +
                             (dir / "train-map_a").string() + "\" 2>/dev/null");
        if (rc != 0) ok = false;
        plots.push_back(collect(out, {".svg"}));
      }
      if (plots[0].empty() || plots[0] != plots[1]) {
        ok = false;
        d << "plot outputs differ; ";
      }
      compared += static_cast<int>(plots[0].size());
    }
  }
  d << compared << " files compared across 2 invocations and 1 vs 8 workers";
  return {ok, d.str()};
}

Outcome throughput(const std::string& cli, const fs::path& work) {
  const fs::path out = work / "bench.txt";
  const int rc = shell("\"" + cli + "\" bench --sim-seconds 60 > \"" + out.string() + "\"");
  std::istringstream in(rc == 0 ? read_text(out) : "");
  std::string key;
  double rate = 0.0, value = 0.0;
  while (in >> key >> value)
    if (key == "substeps_per_second") rate = value;
  g_log["10"] = rate;
  return {rate >= 200000.0, fmt("%.0f substeps/s on one worker", rate)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string cli, work = "acceptance_work";
  std::vector<int> only;
  app.add_option("--cli", cli, "Path to the tendonlab executable")->required();
  app.add_option("--work-dir", work, "Scratch directory");
  app.add_option("--only", only, "Evaluate just these criteria");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(work);

  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, physics_invariants},
      {2, gradients},
      {3, protocol_counts},
      {4, training_pattern},
      {5, task_pattern},
      {6, adaptation_pattern},
      {7, locomotion_pattern},
      {8, ppo_pattern},
      {9, [&] { return cli_determinism(cli, work); }},
      {10, [&] { return throughput(cli, work); }}};
  int failed = 0;
  for (const auto& [n, check] : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), n) == only.end()) continue;
    std::fprintf(stderr, "criterion %d ...\n", n);
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("criterion %d: %s  %s  [%.0f s]\n", n, o.pass ? "PASS" : "FAIL", o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
    g_log["summary"][std::to_string(n)] = {{"pass", o.pass}, {"detail", o.detail}};
    write_text(fs::path(work) / "acceptance.json", g_log.dump(2) + "\n");
  }
  std::printf("%d criteria failed\n", failed);
  return 0;
}
