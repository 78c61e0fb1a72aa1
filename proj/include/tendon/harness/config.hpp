#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tendon/core/errors.hpp"
#include "tendon/core/rng.hpp"
#include "tendon/dynamics/params.hpp"
#include "tendon/dynamics/params_json.hpp"
#include "tendon/g2p/locomotion.hpp"
#include "tendon/g2p/tasks.hpp"
#include "tendon/nets/train.hpp"
#include "tendon/ppo/ppo.hpp"

namespace tendon::harness {

inline constexpr std::string_view kCodeVersion = "tendonlab-0.1.0";

enum class ExperimentKind { training_curves, task_rmse, adaptation, locomotion_g2p, locomotion_ppo };

inline std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::training_curves: return "training_curves";
    case ExperimentKind::task_rmse: return "task_rmse";
    case ExperimentKind::adaptation: return "adaptation";
    case ExperimentKind::locomotion_g2p: return "locomotion_g2p";
    case ExperimentKind::locomotion_ppo: return "locomotion_ppo";
  }
  return "training_curves";
}

inline ExperimentKind kind_from_string(std::string_view s) {
  for (auto k : {ExperimentKind::training_curves, ExperimentKind::task_rmse,
                 ExperimentKind::adaptation, ExperimentKind::locomotion_g2p,
                 ExperimentKind::locomotion_ppo}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown experiment kind: " + std::string(s));
}

struct TaskParams {
  std::string task = "both";  // cyclical | p2p | both
  double babble_duration_s = 180.0;
  double cyclical_frequency_hz = 0.7;
  double cyclical_cycles = 21.0;
  std::array<double, 2> cyclical_center{0.0, 0.0};
  std::array<double, 2> cyclical_amplitude{0.5, 0.5};
  int p2p_points = 10;
  double p2p_hold_s = 3.0;
};

struct AdaptationParams {
  double stiffness_a = 7000.0;
  double stiffness_b = 2000.0;
  int refinements = 5;
};

struct LocomotionParams {
  int max_attempts = 100;
  double reward_threshold_m = 3.0;
  int cycles_per_attempt = 10;
  double cycle_period_s = 1.3;
  double settle_s = 1.0;
};

struct PpoParams {
  int episodes = 300;
  int steps_per_episode = 1000;
  double gamma = 0.99;
  double lambda = 0.95;
  double clip_epsilon = 0.2;
  double learning_rate = 3e-4;
  int update_epochs = 10;
  int minibatch_size = 64;
  double value_coefficient = 0.5;
  double entropy_coefficient = 0.0;
  double initial_log_std = std::log(0.3);
  std::vector<int> hidden{64, 64};
  std::array<double, 8> observation_offset = ppo::ObservationScale{}.offset;
  std::array<double, 8> observation_scale = ppo::ObservationScale{}.scale;
  double reward_cap_m = 9.0;
  int smoothing_window = 50;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::task_rmse;
  std::vector<double> stiffness_list{0, 1000, 2000, 5000, 7000, 10000, 20000, 50000, 100000};
  int monte_carlo_runs = 10;
  std::uint64_t base_seed = 1;
  std::string output_directory = "results";
  TaskParams task{};
  AdaptationParams adaptation{};
  LocomotionParams locomotion{};
  PpoParams ppo{};
  nets::TrainOptions train{};
  LimbParams limb = default_limb();
  SceneParams scene{};
};

inline void validate(const ExperimentConfig& c) {
  if (c.monte_carlo_runs < 1) throw ConfigError("monte_carlo_runs must be >= 1");
  if (c.kind != ExperimentKind::adaptation && c.stiffness_list.empty())
    throw ConfigError("stiffness_list must not be empty");
  for (double k : c.stiffness_list)
    if (!(k >= 0) || !std::isfinite(k)) throw ConfigError("stiffness values must be finite and >= 0");
  for (std::size_t i = 0; i < c.stiffness_list.size(); ++i)
    for (std::size_t j = i + 1; j < c.stiffness_list.size(); ++j)
      if (c.stiffness_list[i] == c.stiffness_list[j]) throw ConfigError("stiffness_list has duplicates");
  if (c.task.task != "cyclical" && c.task.task != "p2p" && c.task.task != "both")
    throw ConfigError("task.task must be cyclical, p2p or both");
  if (!(c.task.babble_duration_s > 0)) throw ConfigError("task.babble_duration_s must be > 0");
  if (!(c.task.cyclical_frequency_hz > 0)) throw ConfigError("task.cyclical_frequency_hz must be > 0");
  if (c.task.p2p_points < 1 || !(c.task.p2p_hold_s > 0))
    throw ConfigError("task.p2p_points must be >= 1 and task.p2p_hold_s > 0");
  if (!(c.adaptation.stiffness_a >= 0) || !(c.adaptation.stiffness_b >= 0))
    throw ConfigError("adaptation stiffness values must be >= 0");
  if (c.adaptation.refinements < 0) throw ConfigError("adaptation.refinements must be >= 0");
  if (c.locomotion.max_attempts < 0) throw ConfigError("locomotion.max_attempts must be >= 0");
  if (!(c.locomotion.reward_threshold_m > 0))
    throw ConfigError("locomotion.reward_threshold_m must be > 0");
  if (c.locomotion.cycles_per_attempt < 1 || !(c.locomotion.cycle_period_s > 0))
    throw ConfigError("locomotion cycles and period must be positive");
  if (c.ppo.episodes < 1 || c.ppo.steps_per_episode < 1)
    throw ConfigError("ppo.episodes and ppo.steps_per_episode must be >= 1");
  if (c.ppo.update_epochs < 0 || c.ppo.minibatch_size < 1)
    throw ConfigError("ppo.update_epochs must be >= 0 and ppo.minibatch_size >= 1");
  if (c.ppo.smoothing_window < 1) throw ConfigError("ppo.smoothing_window must be >= 1");
  if (c.train.epochs < 0 || c.train.batch_size < 1)
    throw ConfigError("train.epochs must be >= 0 and train.batch_size >= 1");
  if (!(c.train.validation_fraction >= 0 && c.train.validation_fraction < 1))
    throw ConfigError("train.validation_fraction must lie in [0, 1)");
  validate(c.limb);
  validate(c.scene);
}

inline Json to_json(const ExperimentConfig& c) {
  Json j;
  j["kind"] = std::string(to_string(c.kind));
  j["stiffness_list"] = c.stiffness_list;
  j["monte_carlo_runs"] = c.monte_carlo_runs;
  j["base_seed"] = c.base_seed;
  j["output_directory"] = c.output_directory;
  j["task"] = {{"task", c.task.task},
               {"babble_duration_s", c.task.babble_duration_s},
               {"cyclical_frequency_hz", c.task.cyclical_frequency_hz},
               {"cyclical_cycles", c.task.cyclical_cycles},
               {"cyclical_center", c.task.cyclical_center},
               {"cyclical_amplitude", c.task.cyclical_amplitude},
               {"p2p_points", c.task.p2p_points},
               {"p2p_hold_s", c.task.p2p_hold_s}};
  j["adaptation"] = {{"stiffness_a", c.adaptation.stiffness_a},
                     {"stiffness_b", c.adaptation.stiffness_b},
                     {"refinements", c.adaptation.refinements}};
  j["locomotion"] = {{"max_attempts", c.locomotion.max_attempts},
                     {"reward_threshold_m", c.locomotion.reward_threshold_m},
                     {"cycles_per_attempt", c.locomotion.cycles_per_attempt},
                     {"cycle_period_s", c.locomotion.cycle_period_s},
                     {"settle_s", c.locomotion.settle_s}};
  j["ppo"] = {{"episodes", c.ppo.episodes},
              {"steps_per_episode", c.ppo.steps_per_episode},
              {"gamma", c.ppo.gamma},
              {"lambda", c.ppo.lambda},
              {"clip_epsilon", c.ppo.clip_epsilon},
              {"learning_rate", c.ppo.learning_rate},
              {"update_epochs", c.ppo.update_epochs},
              {"minibatch_size", c.ppo.minibatch_size},
              {"value_coefficient", c.ppo.value_coefficient},
              {"entropy_coefficient", c.ppo.entropy_coefficient},
              {"initial_log_std", c.ppo.initial_log_std},
              {"hidden", c.ppo.hidden},
              {"observation_offset", c.ppo.observation_offset},
              {"observation_scale", c.ppo.observation_scale},
              {"reward_cap_m", c.ppo.reward_cap_m},
              {"smoothing_window", c.ppo.smoothing_window}};
  j["train"] = {{"epochs", c.train.epochs},
                {"validation_fraction", c.train.validation_fraction},
                {"batch_size", c.train.batch_size},
                {"learning_rate", c.train.learning_rate},
                {"standardize_inputs", c.train.standardize_inputs}};
  j["limb"] = to_json(c.limb);
  j["scene"] = to_json(c.scene);
  return j;
}

/// Parses a config document; absent fields keep their defaults and unknown
/// fields are rejected. The result is validated.
inline ExperimentConfig config_from_json(const Json& j) {
  using detail::read_field;
  using detail::reject_unknown;
  ExperimentConfig c;
  try {
    reject_unknown(j,
                   {"kind", "stiffness_list", "monte_carlo_runs", "base_seed", "output_directory",
                    "task", "adaptation", "locomotion", "ppo", "train", "limb", "scene"},
                   "experiment config");
    if (j.contains("kind")) c.kind = kind_from_string(j.at("kind").get<std::string>());
    read_field(j, "stiffness_list", c.stiffness_list);
    read_field(j, "monte_carlo_runs", c.monte_carlo_runs);
    read_field(j, "base_seed", c.base_seed);
    read_field(j, "output_directory", c.output_directory);
    if (j.contains("task")) {
      const Json& t = j.at("task");
      reject_unknown(t,
                     {"task", "babble_duration_s", "cyclical_frequency_hz", "cyclical_cycles",
                      "cyclical_center", "cyclical_amplitude", "p2p_points", "p2p_hold_s"},
                     "task");
      read_field(t, "task", c.task.task);
      read_field(t, "babble_duration_s", c.task.babble_duration_s);
      read_field(t, "cyclical_frequency_hz", c.task.cyclical_frequency_hz);
      read_field(t, "cyclical_cycles", c.task.cyclical_cycles);
      read_field(t, "cyclical_center", c.task.cyclical_center);
      read_field(t, "cyclical_amplitude", c.task.cyclical_amplitude);
      read_field(t, "p2p_points", c.task.p2p_points);
      read_field(t, "p2p_hold_s", c.task.p2p_hold_s);
    }
    if (j.contains("adaptation")) {
      const Json& a = j.at("adaptation");
      reject_unknown(a, {"stiffness_a", "stiffness_b", "refinements"}, "adaptation");
      read_field(a, "stiffness_a", c.adaptation.stiffness_a);
      read_field(a, "stiffness_b", c.adaptation.stiffness_b);
      read_field(a, "refinements", c.adaptation.refinements);
    }
    if (j.contains("locomotion")) {
      const Json& l = j.at("locomotion");
      reject_unknown(l,
                     {"max_attempts", "reward_threshold_m", "cycles_per_attempt", "cycle_period_s",
                      "settle_s"},
                     "locomotion");
      read_field(l, "max_attempts", c.locomotion.max_attempts);
      read_field(l, "reward_threshold_m", c.locomotion.reward_threshold_m);
      read_field(l, "cycles_per_attempt", c.locomotion.cycles_per_attempt);
      read_field(l, "cycle_period_s", c.locomotion.cycle_period_s);
      read_field(l, "settle_s", c.locomotion.settle_s);
    }
    if (j.contains("ppo")) {
      const Json& p = j.at("ppo");
      reject_unknown(p,
                     {"episodes", "steps_per_episode", "gamma", "lambda", "clip_epsilon",
                      "learning_rate", "update_epochs", "minibatch_size", "value_coefficient",
                      "entropy_coefficient", "initial_log_std", "hidden", "observation_offset",
                      "observation_scale", "reward_cap_m", "smoothing_window"},
                     "ppo");
      read_field(p, "episodes", c.ppo.episodes);
      read_field(p, "steps_per_episode", c.ppo.steps_per_episode);
      read_field(p, "gamma", c.ppo.gamma);
      read_field(p, "lambda", c.ppo.lambda);
      read_field(p, "clip_epsilon", c.ppo.clip_epsilon);
      read_field(p, "learning_rate", c.ppo.learning_rate);
      read_field(p, "update_epochs", c.ppo.update_epochs);
      read_field(p, "minibatch_size", c.ppo.minibatch_size);
      read_field(p, "value_coefficient", c.ppo.value_coefficient);
      read_field(p, "entropy_coefficient", c.ppo.entropy_coefficient);
      read_field(p, "initial_log_std", c.ppo.initial_log_std);
      read_field(p, "hidden", c.ppo.hidden);
      read_field(p, "observation_offset", c.ppo.observation_offset);
      read_field(p, "observation_scale", c.ppo.observation_scale);
      read_field(p, "reward_cap_m", c.ppo.reward_cap_m);
      read_field(p, "smoothing_window", c.ppo.smoothing_window);
    }
    if (j.contains("train")) {
      const Json& t = j.at("train");
      reject_unknown(t,
                     {"epochs", "validation_fraction", "batch_size", "learning_rate",
                      "standardize_inputs"},
                     "train");
      read_field(t, "epochs", c.train.epochs);
      read_field(t, "validation_fraction", c.train.validation_fraction);
      read_field(t, "batch_size", c.train.batch_size);
      read_field(t, "learning_rate", c.train.learning_rate);
      read_field(t, "standardize_inputs", c.train.standardize_inputs);
    }
    if (j.contains("limb")) update_from_json(j.at("limb"), c.limb);
    if (j.contains("scene")) update_from_json(j.at("scene"), c.scene);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid experiment config: ") + e.what());
  }
  validate(c);
  return c;
}

inline std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Hash of the fully resolved config (defaults filled in, keys sorted,
/// output directory excluded), as 16 hex digits.
inline std::string config_hash(const ExperimentConfig& c) {
  Json j = to_json(c);
  j.erase("output_directory");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(j.dump())));
  return buf;
}

/// Seed of run i at stiffness (or series) index j. mix64 is a bijection, so
/// distinct (i, j) pairs give distinct seeds.
inline std::uint64_t run_seed(std::uint64_t base_seed, std::uint32_t run, std::uint32_t index) noexcept {
  return base_seed ^ mix64((static_cast<std::uint64_t>(index) << 32) | run);
}

inline nets::TrainOptions train_options(const ExperimentConfig& c) { return c.train; }

inline g2p::TaskSettings task_settings(const ExperimentConfig& c) {
  g2p::TaskSettings t;
  t.cyclical_frequency_hz = c.task.cyclical_frequency_hz;
  t.cyclical_cycles = c.task.cyclical_cycles;
  t.cyclical_center = Vec2(c.task.cyclical_center[0], c.task.cyclical_center[1]);
  t.cyclical_amplitude = Vec2(c.task.cyclical_amplitude[0], c.task.cyclical_amplitude[1]);
  t.p2p_points = c.task.p2p_points;
  t.p2p_hold_s = c.task.p2p_hold_s;
  t.babble_duration_s = c.task.babble_duration_s;
  return t;
}

inline g2p::LocomotionOptions locomotion_options(const ExperimentConfig& c) {
  g2p::LocomotionOptions o;
  o.max_attempts = c.locomotion.max_attempts;
  o.reward_threshold_m = c.locomotion.reward_threshold_m;
  o.cycles_per_attempt = c.locomotion.cycles_per_attempt;
  o.cycle_period_s = c.locomotion.cycle_period_s;
  o.settle_s = c.locomotion.settle_s;
  o.babble_duration_s = c.task.babble_duration_s;
  o.train = c.train;
  return o;
}

inline ppo::PpoConfig ppo_config(const ExperimentConfig& c) {
  ppo::PpoConfig p;
  p.episodes = c.ppo.episodes;
  p.steps_per_episode = c.ppo.steps_per_episode;
  p.gamma = c.ppo.gamma;
  p.lambda = c.ppo.lambda;
  p.clip_epsilon = c.ppo.clip_epsilon;
  p.learning_rate = c.ppo.learning_rate;
  p.update_epochs = c.ppo.update_epochs;
  p.minibatch_size = c.ppo.minibatch_size;
  p.value_coefficient = c.ppo.value_coefficient;
  p.entropy_coefficient = c.ppo.entropy_coefficient;
  p.settle_s = c.locomotion.settle_s;
  p.shape.hidden = c.ppo.hidden;
  p.shape.initial_log_std = c.ppo.initial_log_std;
  p.observation_scale.offset = c.ppo.observation_offset;
  p.observation_scale.scale = c.ppo.observation_scale;
  return p;
}

}  // namespace tendon::harness
