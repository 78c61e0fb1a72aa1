#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "tendon/core/csv.hpp"
#include "tendon/core/errors.hpp"
#include "tendon/core/rng.hpp"
#include "tendon/g2p/babble.hpp"
#include "tendon/g2p/inverse_map.hpp"
#include "tendon/g2p/locomotion.hpp"
#include "tendon/g2p/tasks.hpp"
#include "tendon/nets/serialize.hpp"
#include "tendon/harness/config.hpp"
#include "tendon/harness/records.hpp"
#include "tendon/harness/summary.hpp"
#include "tendon/ppo/ppo.hpp"
#include "tendon/tasks/metrics.hpp"
#include "tendon/tasks/reference.hpp"

namespace tendon::harness {

struct Job {
  std::string group;
  double stiffness = 0.0;
  double babble_stiffness = 0.0;
  int run = 0;
  std::uint64_t seed = 0;
};

/// One job per (stiffness, run), or per (series, run) for adaptation.
inline std::vector<Job> plan_jobs(const ExperimentConfig& c) {
  std::vector<Job> jobs;
  if (c.kind == ExperimentKind::adaptation) {
    const double a = c.adaptation.stiffness_a, b = c.adaptation.stiffness_b;
    const std::tuple<const char*, double, double> series[] = {
        {"A_A", a, a}, {"A_B", a, b}, {"B_A", b, a}, {"B_B", b, b}};
    for (std::uint32_t j = 0; j < 4; ++j) {
      for (int i = 0; i < c.monte_carlo_runs; ++i) {
        const auto& [name, kb, kt] = series[j];
        jobs.push_back({name, kt, kb, i, run_seed(c.base_seed, static_cast<std::uint32_t>(i), j)});
      }
    }
    return jobs;
  }
  for (std::size_t j = 0; j < c.stiffness_list.size(); ++j) {
    const double k = c.stiffness_list[j];
    for (int i = 0; i < c.monte_carlo_runs; ++i) {
      jobs.push_back({format_double(k), k, k, i,
                      run_seed(c.base_seed, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j))});
    }
  }
  return jobs;
}

namespace detail {

inline void run_training_curves(const ExperimentConfig& c, const Job& job, RunRecord& rec, bool keep_model) {
  const LimbParams limb = with_stiffness(c.limb, job.stiffness);
  const g2p::BabbleLog log = g2p::motor_babble(limb, c.task.babble_duration_s, derive_seed(job.seed, 1));
  const g2p::InverseMap map = g2p::build_inverse_map(log, derive_seed(job.seed, 2), c.train);
  if (keep_model) rec.model = nets::to_json(map.model).dump(1);
  rec.detail_columns = {"epoch", "train_mse", "val_mse"};
  const auto& h = map.history;
  for (std::size_t e = 0; e < h.train_mse.size(); ++e)
    rec.details.push_back({static_cast<double>(e + 1), h.train_mse[e], h.val_mse[e]});
  if (!h.train_mse.empty()) {
    rec.set("epoch1_train_mse", h.train_mse.front());
    rec.set("final_train_mse", h.train_mse.back());
    rec.set("final_val_mse", h.val_mse.back());
  }
}

inline void run_task_rmse(const ExperimentConfig& c, const Job& job, RunRecord& rec) {
  const LimbParams limb = with_stiffness(c.limb, job.stiffness);
  const g2p::TaskSettings settings = task_settings(c);
  const g2p::BabbleLog log = g2p::motor_babble(limb, c.task.babble_duration_s, derive_seed(job.seed, 1));
  const g2p::InverseMap map = g2p::build_inverse_map(log, derive_seed(job.seed, 2), c.train);
  auto record = [&](const std::string& name, const tasks::ReferenceTrajectory& ref) {
    const g2p::AttemptRecord a = g2p::run_task(map, ref, limb);
    rec.set(name + "_rmse_q1", a.rmse[0]);
    rec.set(name + "_rmse_q2", a.rmse[1]);
    rec.set(name + "_rmse", a.mean_rmse());
    rec.set(name + "_energy", a.energy);
  };
  if (c.task.task != "p2p") record("cyclical", g2p::default_cyclical(settings, limb));
  if (c.task.task != "cyclical") {
    record("p2p", tasks::p2p_reference(derive_seed(job.seed, 3), c.task.p2p_points, c.task.p2p_hold_s,
                                       limb.joint_limits));
  }
}

inline void run_adaptation(const ExperimentConfig& c, const Job& job, RunRecord& rec) {
  const g2p::AdaptationSeries s =
      g2p::adaptation_experiment(c.limb, job.babble_stiffness, job.stiffness, c.adaptation.refinements,
                                 job.seed, task_settings(c), c.train);
  rec.detail_columns = {"refinement", "rmse_q1", "rmse_q2", "rmse"};
  for (std::size_t r = 0; r < s.rmse.size(); ++r)
    rec.details.push_back({static_cast<double>(r), s.rmse[r][0], s.rmse[r][1], s.rmse[r].mean()});
  if (!s.rmse.empty()) {
    rec.set("rmse_initial", s.rmse.front().mean());
    rec.set("rmse_final", s.rmse.back().mean());
  }
  rec.diverged = s.diverged;
}

inline void run_locomotion_g2p(const ExperimentConfig& c, const Job& job, RunRecord& rec) {
  const LimbParams limb = with_stiffness(c.limb, job.stiffness);
  const g2p::LocomotionResult r = g2p::locomotion_g2p(limb, c.scene, job.seed, locomotion_options(c));
  rec.detail_columns = {"attempt", "exploit", "reward_m", "rmse_q1", "rmse_q2", "energy", "diverged"};
  for (std::size_t i = 0; i < r.attempts.size(); ++i) {
    const auto& a = r.attempts[i];
    const bool exploit = r.success && i + 1 == r.attempts.size();
    rec.details.push_back({static_cast<double>(a.index), exploit ? 1.0 : 0.0, a.reward, a.rmse[0],
                           a.rmse[1], a.energy, a.diverged ? 1.0 : 0.0});
  }
  rec.set("success", r.success ? 1.0 : 0.0);
  rec.set("attempts_used", r.attempts_used);
  rec.set("final_reward_m", r.final_reward);
  rec.set("final_energy", r.final_energy);
  rec.set("best_reward_m", r.best_reward);
}

inline void run_locomotion_ppo(const ExperimentConfig& c, const Job& job, RunRecord& rec, bool keep_model) {
  const LimbParams limb = with_stiffness(c.limb, job.stiffness);
  const ppo::PpoResult r = ppo::train_ppo(limb, c.scene, ppo_config(c), job.seed);
  if (keep_model) rec.model = ppo::to_json(r.policy).dump(1);
  const std::vector<double> rewards = r.rewards();
  const std::vector<double> smooth =
      tasks::moving_average(rewards, static_cast<std::size_t>(c.ppo.smoothing_window));
  rec.detail_columns = {"episode",     "reward_m",   "reward_smoothed_m", "value_loss",
                        "policy_loss", "mean_ratio", "diverged"};
  int diverged = 0;
  for (std::size_t i = 0; i < r.episodes.size(); ++i) {
    const auto& e = r.episodes[i];
    diverged += e.diverged ? 1 : 0;
    rec.details.push_back({static_cast<double>(e.episode), e.reward, smooth[i], e.value_loss,
                           e.policy_loss, e.mean_ratio, e.diverged ? 1.0 : 0.0});
  }
  const long first = tasks::first_index_reaching(smooth, c.ppo.reward_cap_m);
  rec.set("final_smoothed_reward_m", smooth.back());
  rec.set("mean_reward_m",
          std::accumulate(rewards.begin(), rewards.end(), 0.0) / static_cast<double>(rewards.size()));
  rec.set("passed_cap", first >= 0 ? 1.0 : 0.0);
  rec.set("first_episode_past_cap",
          first >= 0 ? static_cast<double>(first) : std::numeric_limits<double>::quiet_NaN());
  rec.set("diverged_episodes", diverged);
}

}  // namespace detail

/// Runs one job. Failures are recorded in the record, never thrown.
/// `keep_model` stores the trained map (training curves) or policy (PPO).
inline RunRecord execute_job(const ExperimentConfig& c, const Job& job, bool keep_model = false) {
  RunRecord rec;
  rec.group = job.group;
  rec.stiffness = job.stiffness;
  rec.babble_stiffness = job.babble_stiffness;
  rec.run = job.run;
  rec.seed = job.seed;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    switch (c.kind) {
      case ExperimentKind::training_curves: detail::run_training_curves(c, job, rec, keep_model); break;
      case ExperimentKind::task_rmse: detail::run_task_rmse(c, job, rec); break;
      case ExperimentKind::adaptation: detail::run_adaptation(c, job, rec); break;
      case ExperimentKind::locomotion_g2p: detail::run_locomotion_g2p(c, job, rec); break;
      case ExperimentKind::locomotion_ppo: detail::run_locomotion_ppo(c, job, rec, keep_model); break;
    }
  } catch (const NumericalDivergence&) {
    rec.diverged = true;
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
  rec.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

struct ExperimentResult {
  std::string config_hash;
  std::vector<RunRecord> records;  // sorted by (stiffness, babble stiffness, run)
  Summary summary;

  bool any_failed() const {
    return std::any_of(records.begin(), records.end(), [](const RunRecord& r) { return r.failed(); });
  }
};

inline void sort_records(std::vector<RunRecord>& records) {
  std::sort(records.begin(), records.end(), [](const RunRecord& a, const RunRecord& b) {
    return std::tie(a.stiffness, a.babble_stiffness, a.run) <
           std::tie(b.stiffness, b.babble_stiffness, b.run);
  });
}

/// Runs every job on a pool of `workers` threads. Each record lands in its
/// own slot and aggregation happens after sorting, so the result does not
/// depend on scheduling.
inline ExperimentResult run_experiment(const ExperimentConfig& c, int workers = 1,
                                       const std::function<void(const RunRecord&)>& on_done = {},
                                       bool keep_models = false) {
  validate(c);
  const std::vector<Job> jobs = plan_jobs(c);
  std::vector<RunRecord> records(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex report_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      records[i] = execute_job(c, jobs[i], keep_models);
      if (on_done) {
        std::lock_guard<std::mutex> lock(report_mutex);
        on_done(records[i]);
      }
    }
  };
  const int n = std::clamp(workers, 1, static_cast<int>(std::max<std::size_t>(1, jobs.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  sort_records(records);
  ExperimentResult result;
  result.config_hash = config_hash(c);
  result.summary = summarize(records, c.kind);
  result.records = std::move(records);
  return result;
}

}  // namespace tendon::harness
