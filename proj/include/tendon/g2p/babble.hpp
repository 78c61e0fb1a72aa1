#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>

#include "tendon/core/errors.hpp"
#include "tendon/core/rng.hpp"
#include "tendon/dynamics/limb.hpp"
#include "tendon/tasks/reference.hpp"

namespace tendon::g2p {

using tasks::RowMatrix;

inline constexpr double kTick = 0.01;  // s, one 100 Hz sample

/// Random activation generator: per muscle, piecewise-constant levels drawn
/// uniform in [0, 1], held for a uniform random duration, then low-pass
/// filtered.
struct BabbleOptions {
  double hold_min_s = 0.1;
  double hold_max_s = 0.5;
  double filter_tau_s = 0.05;
};

struct BabbleLog {
  RowMatrix activations;  // T x 3
  RowMatrix kinematics;   // T x 6
  double sample_rate = tasks::kSampleRate;
  double stiffness = 0.0;

  Eigen::Index size() const noexcept { return activations.rows(); }
};

inline void write_kinematics(const LimbState& s, Eigen::Ref<RowMatrix> row) {
  row(0, 0) = s.q[0];
  row(0, 1) = s.q[1];
  row(0, 2) = s.qd[0];
  row(0, 3) = s.qd[1];
  row(0, 4) = s.qdd[0];
  row(0, 5) = s.qdd[1];
}

/// Drives the fixed-base limb from rest with babbling activations. Row i holds
/// the activation applied during tick i and the kinematics at its end.
inline BabbleLog motor_babble(const LimbParams& limb, double duration_s, std::uint64_t seed,
                              const BabbleOptions& options = {}) {
  if (!(duration_s > 0)) throw std::invalid_argument("babble duration must be positive");
  const Eigen::Index n = tasks::sample_count(duration_s);
  BabbleLog log;
  log.stiffness = limb.muscles[0].k;
  log.activations.resize(n, 3);
  log.kinematics.resize(n, tasks::kKinematicsWidth);

  Rng rng(seed);
  const double alpha = 1.0 - std::exp(-kTick / options.filter_tau_s);
  std::array<double, 3> target{}, remaining{}, level{};
  for (int m = 0; m < 3; ++m) {
    target[m] = rng.uniform();
    remaining[m] = rng.uniform(options.hold_min_s, options.hold_max_s);
  }

  LimbState state;
  ActivationSample act;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int m = 0; m < 3; ++m) {
      if (remaining[m] <= 0.0) {
        target[m] = rng.uniform();
        remaining[m] += rng.uniform(options.hold_min_s, options.hold_max_s);
      }
      remaining[m] -= kTick;
      level[m] += alpha * (target[m] - level[m]);
      act.a[m] = level[m];
    }
    try {
      state = step(state, act, kTick, limb);
    } catch (const NumericalDivergence& e) {
      throw NumericalDivergence(std::string("babbling diverged: ") + e.what(), i);
    }
    for (int m = 0; m < 3; ++m) log.activations(i, m) = act.a[m];
    write_kinematics(state, log.kinematics.row(i));
  }
  return log;
}

}  // namespace tendon::g2p
