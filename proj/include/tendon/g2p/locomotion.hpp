#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "tendon/dynamics/scene.hpp"
#include "tendon/g2p/babble.hpp"
#include "tendon/g2p/inverse_map.hpp"
#include "tendon/g2p/tasks.hpp"
#include "tendon/tasks/metrics.hpp"
#include "tendon/tasks/reference.hpp"

namespace tendon::g2p {

struct LocomotionOptions {
  int max_attempts = 100;
  double reward_threshold_m = 3.0;
  int cycles_per_attempt = 10;
  double cycle_period_s = 1.3;
  double babble_duration_s = 180.0;
  double settle_s = 1.0;
  nets::TrainOptions train{};
};

/// Scene start state: chassis at the gantry equilibrium, limb hanging, then
/// left passive for `settle_s` so the foot rests on the ground.
inline SceneState settled_scene_state(const SceneParams& scene, const LimbParams& limb,
                                      double settle_s) {
  SceneState s = initial_scene_state(scene, limb);
  const ActivationSample rest;
  const auto ticks = tasks::sample_count(settle_s);
  for (Eigen::Index i = 0; i < ticks; ++i) s = scene_step(s, rest, kTick, scene, limb);
  s.x = 0.0;
  return s;
}

/// Runs a reference open loop through the map in the locomotion scene. The
/// reward is the net chassis displacement.
inline AttemptRecord run_scene_task(const InverseMap& map, const tasks::ReferenceTrajectory& reference,
                                    const SceneParams& scene, const LimbParams& limb,
                                    const SceneState& initial, int* contact_toggles = nullptr) {
  AttemptRecord rec;
  rec.desired = reference.samples;
  rec.activations = predict_activations(map, reference.samples);
  rec.realized.resize(reference.size(), tasks::kKinematicsWidth);
  SceneState state = initial;
  ActivationSample act;
  int toggles = 0;
  for (Eigen::Index i = 0; i < reference.size(); ++i) {
    act.a = rec.activations.row(i).transpose();
    const bool was = state.foot_contact;
    try {
      state = scene_step(state, act, kTick, scene, limb);
    } catch (const NumericalDivergence& e) {
      throw NumericalDivergence(e.what(), i);
    }
    if (state.foot_contact != was) ++toggles;
    write_kinematics(state.limb, rec.realized.row(i));
  }
  rec.rmse = tasks::rmse(rec.realized, rec.desired);
  rec.energy = tasks::energy(rec.activations);
  rec.reward = state.x - initial.x;
  if (contact_toggles) *contact_toggles = toggles;
  return rec;
}

struct AttemptSummary {
  int index = 0;
  double reward = std::numeric_limits<double>::quiet_NaN();
  Vec2 rmse = Vec2::Constant(std::numeric_limits<double>::quiet_NaN());
  double energy = std::numeric_limits<double>::quiet_NaN();
  bool diverged = false;
};

struct LocomotionResult {
  bool success = false;
  int attempts_used = 0;
  double final_reward = std::numeric_limits<double>::quiet_NaN();
  double final_energy = std::numeric_limits<double>::quiet_NaN();
  double best_reward = std::numeric_limits<double>::quiet_NaN();
  std::vector<AttemptSummary> attempts;  // exploration attempts, then the exploit run
};

/// Explore/exploit G2P locomotion. Each exploration attempt samples a random
/// periodic reference, runs it for `cycles_per_attempt` cycles and refines the
/// map with the realized data. The first attempt reaching the threshold ends
/// exploration; the refined map then replays that reference once and the
/// replay's reward and energy are reported. Without success, the final
/// reward and energy are those of the last completed attempt.
inline LocomotionResult locomotion_g2p(const LimbParams& limb, const SceneParams& scene,
                                       std::uint64_t seed, const LocomotionOptions& options = {}) {
  if (!(options.reward_threshold_m > 0)) throw std::invalid_argument("threshold must be positive");
  LocomotionResult result;
  if (options.max_attempts <= 0) return result;

  const BabbleLog log = motor_babble(limb, options.babble_duration_s, derive_seed(seed, 20));
  InverseMap map = build_inverse_map(log, derive_seed(seed, 21), options.train);
  Experience experience;
  experience.add(log);
  const SceneState start = settled_scene_state(scene, limb, options.settle_s);
  Rng explore(derive_seed(seed, 22));

  std::optional<tasks::ReferenceTrajectory> winner;
  for (int attempt = 0; attempt < options.max_attempts; ++attempt) {
    const tasks::Ellipse e =
        tasks::sample_exploration_ellipse(explore, limb.joint_limits, options.cycle_period_s);
    auto reference = tasks::exploration_reference(e, options.cycles_per_attempt);
    AttemptSummary summary;
    summary.index = attempt;
    result.attempts_used = attempt + 1;
    try {
      const AttemptRecord rec = run_scene_task(map, reference, scene, limb, start);
      summary.reward = rec.reward;
      summary.rmse = rec.rmse;
      summary.energy = rec.energy;
      experience.add(rec.realized, rec.activations);
      map = refine(map, experience, derive_seed(seed, 1000 + static_cast<std::uint64_t>(attempt)),
                   options.train);
    } catch (const NumericalDivergence&) {
      summary.diverged = true;
    }
    result.attempts.push_back(summary);
    if (!summary.diverged &&
        (std::isnan(result.best_reward) || summary.reward > result.best_reward)) {
      result.best_reward = summary.reward;
    }
    if (!summary.diverged && summary.reward >= options.reward_threshold_m) {
      result.success = true;
      winner = std::move(reference);
      break;
    }
  }
  if (!winner) {
    // No exploit phase; the final attempt is the last one that completed.
    for (auto it = result.attempts.rbegin(); it != result.attempts.rend(); ++it) {
      if (it->diverged) continue;
      result.final_reward = it->reward;
      result.final_energy = it->energy;
      break;
    }
    return result;
  }

  AttemptSummary exploit;
  exploit.index = result.attempts_used;
  try {
    const AttemptRecord rec = run_scene_task(map, *winner, scene, limb, start);
    exploit.reward = rec.reward;
    exploit.rmse = rec.rmse;
    exploit.energy = rec.energy;
    result.final_reward = rec.reward;
    result.final_energy = rec.energy;
  } catch (const NumericalDivergence&) {
    exploit.diverged = true;
  }
  result.attempts.push_back(exploit);
  return result;
}

}  // namespace tendon::g2p
