#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "tendon/dynamics/limb.hpp"
#include "tendon/g2p/babble.hpp"
#include "tendon/g2p/inverse_map.hpp"
#include "tendon/tasks/metrics.hpp"
#include "tendon/tasks/reference.hpp"

namespace tendon::g2p {

/// One open-loop execution of a reference through the inverse map.
struct AttemptRecord {
  RowMatrix desired;      // T x 6
  RowMatrix realized;     // T x 6
  RowMatrix activations;  // T x 3
  Vec2 rmse = Vec2::Zero();
  double energy = 0.0;
  double reward = std::numeric_limits<double>::quiet_NaN();  // m, locomotion only
  bool diverged = false;

  double mean_rmse() const noexcept { return 0.5 * (rmse[0] + rmse[1]); }
};

/// Feeds each desired 6-vector to the map, applies the clamped activation for
/// one tick and records where the limb ends up. No feedback correction.
inline AttemptRecord run_task(const InverseMap& map, const tasks::ReferenceTrajectory& reference,
                              const LimbParams& limb, const LimbState& initial = {}) {
  AttemptRecord rec;
  rec.desired = reference.samples;
  rec.activations = predict_activations(map, reference.samples);
  rec.realized.resize(reference.size(), tasks::kKinematicsWidth);
  LimbState state = initial;
  ActivationSample act;
  for (Eigen::Index i = 0; i < reference.size(); ++i) {
    act.a = rec.activations.row(i).transpose();
    try {
      state = step(state, act, kTick, limb);
    } catch (const NumericalDivergence& e) {
      throw NumericalDivergence(e.what(), i);
    }
    write_kinematics(state, rec.realized.row(i));
  }
  rec.rmse = tasks::rmse(rec.realized, rec.desired);
  rec.energy = tasks::energy(rec.activations);
  return rec;
}

/// Protocol constants of the two limb tasks.
struct TaskSettings {
  double cyclical_frequency_hz = 0.7;
  double cyclical_cycles = 21;
  Vec2 cyclical_center = Vec2::Zero();
  Vec2 cyclical_amplitude = Vec2(0.5, 0.5);
  int p2p_points = 10;
  double p2p_hold_s = 3.0;
  double babble_duration_s = 180.0;
};

inline tasks::ReferenceTrajectory default_cyclical(const TaskSettings& t, const LimbParams& limb) {
  return tasks::cyclical_reference(t.cyclical_frequency_hz, t.cyclical_cycles, t.cyclical_center,
                                   t.cyclical_amplitude, limb.joint_limits);
}

/// RMSE after each of 0..n refinements when babbling at one stiffness and
/// running/refining the cyclical task at another.
struct AdaptationSeries {
  double babble_stiffness = 0.0;
  double test_stiffness = 0.0;
  std::vector<Vec2> rmse;  // index r = after r refinements
  bool diverged = false;
};

inline AdaptationSeries adaptation_experiment(const LimbParams& base, double k_babble, double k_test,
                                              int n_refinements, std::uint64_t seed,
                                              const TaskSettings& settings = {},
                                              const nets::TrainOptions& options = {}) {
  if (n_refinements < 0) throw std::invalid_argument("n_refinements must be >= 0");
  AdaptationSeries series{k_babble, k_test, {}, false};
  const LimbParams babble_limb = with_stiffness(base, k_babble);
  const LimbParams test_limb = with_stiffness(base, k_test);
  const BabbleLog log = motor_babble(babble_limb, settings.babble_duration_s, derive_seed(seed, 10));
  InverseMap map = build_inverse_map(log, derive_seed(seed, 11), options);
  Experience experience;
  experience.add(log);
  const auto reference = default_cyclical(settings, test_limb);
  for (int r = 0; r <= n_refinements; ++r) {
    AttemptRecord attempt;
    try {
      attempt = run_task(map, reference, test_limb);
    } catch (const NumericalDivergence&) {
      series.diverged = true;
      break;
    }
    series.rmse.push_back(attempt.rmse);
    if (r == n_refinements) break;
    experience.add(attempt.realized, attempt.activations);
    map = refine(map, experience, derive_seed(seed, 100 + static_cast<std::uint64_t>(r)), options);
  }
  return series;
}

}  // namespace tendon::g2p
