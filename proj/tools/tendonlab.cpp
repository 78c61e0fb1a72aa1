// tendonlab: command-line front end for the limb experiments.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tendon/core/csv.hpp"
#include "tendon/core/errors.hpp"
#include "tendon/g2p/babble.hpp"
#include "tendon/harness/bench.hpp"
#include "tendon/harness/config.hpp"
#include "tendon/harness/report.hpp"
#include "tendon/harness/runner.hpp"
#include "tendon/tasks/reference.hpp"

namespace fs = std::filesystem;
using namespace tendon;
using namespace tendon::harness;

namespace {

struct GlobalFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> runs;
  std::vector<double> stiffness;
  std::optional<std::string> out_dir;
  int workers = 1;
  bool full_runs = false;
};

ExperimentConfig load_config(const GlobalFlags& g, std::optional<ExperimentKind> kind) {
  ExperimentConfig c;
  if (!g.config_path.empty()) c = config_from_json(read_json_file(g.config_path));
  if (kind) c.kind = *kind;
  if (g.full_runs) c.monte_carlo_runs = 50;
  if (g.runs) c.monte_carlo_runs = *g.runs;
  if (g.seed) c.base_seed = *g.seed;
  if (!g.stiffness.empty()) c.stiffness_list = g.stiffness;
  if (g.out_dir) c.output_directory = *g.out_dir;
  if (g.workers < 1) throw ConfigError("--workers must be >= 1");
  validate(c);
  return c;
}

void progress(const RunRecord& r) {
  const char* status = r.diverged ? "diverged" : (r.error.empty() ? "ok" : "error");
  std::fprintf(stderr, "  %-8s run %3d  %-8s %.1fs%s%s\n", r.group.c_str(), r.run, status, r.wall_clock_s,
               r.error.empty() ? "" : "  ", r.error.c_str());
}

void write_plots(const fs::path& dir, const Summary& s, ExperimentKind kind) {
  for (const auto& [name, svg] : emit_plots(s, kind)) write_text(dir / name, svg);
}

std::string model_file(const RunRecord& r) {
  return r.group + "_run" + std::to_string(r.run) + ".json";
}

int run_and_report(const ExperimentConfig& c, int workers, bool keep_models) {
  std::fprintf(stderr, "%s: %zu jobs on %d worker(s), config %s\n", std::string(to_string(c.kind)).c_str(),
               plan_jobs(c).size(), workers, config_hash(c).c_str());
  const ExperimentResult result = run_experiment(c, workers, progress, keep_models);
  const fs::path dir = c.output_directory;
  write_experiment(dir, c, result, workers);
  write_plots(dir, result.summary, c.kind);
  if (keep_models) {
    fs::create_directories(dir / "models");
    for (const auto& r : result.records)
      if (!r.model.empty()) write_text(dir / "models" / model_file(r), r.model + "\n");
  }
  std::fprintf(stderr, "wrote %s\n", dir.string().c_str());
  return result.any_failed() ? 2 : 0;
}

int cmd_babble(const ExperimentConfig& c) {
  const fs::path dir = fs::path(c.output_directory) / "babble";
  fs::create_directories(dir);
  std::ostringstream index;
  CsvWriter idx(index);
  idx.header({"stiffness", "run", "seed", "samples", "file"});
  for (std::size_t j = 0; j < c.stiffness_list.size(); ++j) {
    const double k = c.stiffness_list[j];
    const LimbParams limb = with_stiffness(c.limb, k);
    for (int i = 0; i < c.monte_carlo_runs; ++i) {
      const std::uint64_t seed = run_seed(c.base_seed, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
      // Same stream the experiments babble with.
      const g2p::BabbleLog log = g2p::motor_babble(limb, c.task.babble_duration_s, derive_seed(seed, 1));
      const std::string name = format_double(k) + "_run" + std::to_string(i) + ".csv";
      std::ostringstream out;
      CsvWriter w(out);
      w.header({"t", "a1", "a2", "a3", "q1", "q2", "qd1", "qd2", "qdd1", "qdd2"});
      for (Eigen::Index r = 0; r < log.size(); ++r) {
        w.field(static_cast<double>(r + 1) / log.sample_rate);
        for (int m = 0; m < 3; ++m) w.field(log.activations(r, m));
        for (int m = 0; m < tasks::kKinematicsWidth; ++m) w.field(log.kinematics(r, m));
        w.end_row();
      }
      write_text(dir / name, out.str());
      idx.field(k).field(i).field(static_cast<unsigned long long>(seed)).field(static_cast<long long>(log.size()));
      idx.field(name).end_row();
      std::fprintf(stderr, "  %-8s run %3d  %lld samples\n", format_double(k).c_str(), i,
                   static_cast<long long>(log.size()));
    }
  }
  write_text(fs::path(c.output_directory) / "babble_index.csv", index.str());
  write_text(fs::path(c.output_directory) / "config.resolved.json", to_json(c).dump(2) + "\n");
  return 0;
}

void export_references(const ExperimentConfig& c) {
  const fs::path dir = fs::path(c.output_directory) / "references";
  fs::create_directories(dir);
  std::ostringstream cyc;
  tasks::write_reference_csv(cyc, g2p::default_cyclical(task_settings(c), c.limb));
  write_text(dir / "cyclical.csv", cyc.str());
  for (const Job& job : plan_jobs(c)) {
    std::ostringstream p2p;
    tasks::write_reference_csv(p2p, tasks::p2p_reference(derive_seed(job.seed, 3), c.task.p2p_points,
                                                         c.task.p2p_hold_s, c.limb.joint_limits));
    write_text(dir / ("p2p_" + job.group + "_run" + std::to_string(job.run) + ".csv"), p2p.str());
  }
}

int cmd_plot(const std::string& in_dir, const std::optional<std::string>& out_dir) {
  const fs::path in = in_dir;
  const ExperimentConfig c = config_from_json(read_json_file((in / "config.resolved.json").string()));
  const Summary s = read_summary(read_text(in / "summary.csv"), read_text(in / "curves.csv"), c.kind);
  const fs::path out = out_dir ? fs::path(*out_dir) : in;
  fs::create_directories(out);
  write_plots(out, s, c.kind);
  std::fprintf(stderr, "wrote plots to %s\n", out.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Experiments on a simulated tendon-driven limb with configurable tendon stiffness."};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  app.add_option("--config", g.config_path, "JSON experiment config")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Base seed");
  app.add_option("--runs", g.runs, "Monte Carlo runs per stiffness");
  app.add_option("--stiffness", g.stiffness, "Tendon stiffness values in N/m (replaces the list)")
      ->delimiter(',');
  app.add_option("--out-dir", g.out_dir, "Output directory");
  app.add_option("--workers", g.workers, "Worker threads");
  app.add_flag("--full-runs", g.full_runs, "Use 50 Monte Carlo runs (overridden by --runs)");

  auto* babble = app.add_subcommand("babble", "Write motor babbling logs");
  auto* train_map = app.add_subcommand("train-map", "Train inverse maps, record epoch curves, save the maps");
  auto* task = app.add_subcommand("task", "Cyclical and point-to-point tracking RMSE");
  std::string task_name = "both";
  bool export_refs = false;
  task->add_option("--task", task_name, "cyclical, p2p or both")
      ->check(CLI::IsMember({"cyclical", "p2p", "both"}));
  task->add_flag("--export-references", export_refs, "Also write the reference trajectories as CSV");
  auto* adapt = app.add_subcommand("adapt", "Train at one stiffness, refine and test at another");
  std::optional<double> adapt_a, adapt_b;
  std::optional<int> refinements;
  adapt->add_option("--a", adapt_a, "Stiffness A (N/m)");
  adapt->add_option("--b", adapt_b, "Stiffness B (N/m)");
  adapt->add_option("--refinements", refinements, "Refinement rounds");
  auto* loco = app.add_subcommand("locomote-g2p", "Locomotion by babbling, exploration and refinement");
  std::optional<int> max_attempts;
  loco->add_option("--max-attempts", max_attempts, "Attempt budget per run");
  auto* ppo = app.add_subcommand("locomote-ppo", "Locomotion learned with PPO");
  std::optional<int> episodes;
  bool save_policies = false;
  ppo->add_option("--episodes", episodes, "Episodes per run");
  ppo->add_flag("--save-policies", save_policies, "Write the final policy of every run");
  auto* sweep = app.add_subcommand("sweep", "Run the experiment described by the config file");
  std::string sweep_kind;
  sweep->add_option("--kind", sweep_kind, "Experiment kind (overrides the config)");
  auto* plot = app.add_subcommand("plot", "Render SVG plots from an output directory");
  std::string plot_in;
  plot->add_option("--in", plot_in, "Directory holding summary.csv, curves.csv and config.resolved.json")
      ->required();
  auto* bench = app.add_subcommand("bench", "Limb simulation throughput on one thread");
  double bench_seconds = 200.0;
  bench->add_option("--sim-seconds", bench_seconds, "Simulated seconds")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*plot) return cmd_plot(plot_in, g.out_dir);
    if (*bench) {
      const ExperimentConfig c = load_config(g, std::nullopt);
      const BenchResult r = bench_limb(c.limb, bench_seconds, c.base_seed);
      std::printf("substeps %lld\nseconds %.6f\nsubsteps_per_second %.0f\n", r.substeps, r.seconds,
                  r.substeps_per_second);
      return 0;
    }
    if (*babble) return cmd_babble(load_config(g, std::nullopt));
    if (*train_map) return run_and_report(load_config(g, ExperimentKind::training_curves), g.workers, true);
    if (*task) {
      ExperimentConfig c = load_config(g, ExperimentKind::task_rmse);
      c.task.task = task_name;
      validate(c);
      if (export_refs) export_references(c);
      return run_and_report(c, g.workers, false);
    }
    if (*adapt) {
      ExperimentConfig c = load_config(g, ExperimentKind::adaptation);
      if (adapt_a) c.adaptation.stiffness_a = *adapt_a;
      if (adapt_b) c.adaptation.stiffness_b = *adapt_b;
      if (refinements) c.adaptation.refinements = *refinements;
      validate(c);
      return run_and_report(c, g.workers, false);
    }
    if (*loco) {
      ExperimentConfig c = load_config(g, ExperimentKind::locomotion_g2p);
      if (max_attempts) c.locomotion.max_attempts = *max_attempts;
      validate(c);
      return run_and_report(c, g.workers, false);
    }
    if (*ppo) {
      ExperimentConfig c = load_config(g, ExperimentKind::locomotion_ppo);
      if (episodes) c.ppo.episodes = *episodes;
      validate(c);
      return run_and_report(c, g.workers, save_policies);
    }
    if (*sweep) {
      if (g.config_path.empty() && sweep_kind.empty()) throw ConfigError("sweep needs --config or --kind");
      std::optional<ExperimentKind> kind;
      if (!sweep_kind.empty()) kind = kind_from_string(sweep_kind);
      return run_and_report(load_config(g, kind), g.workers, false);
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
