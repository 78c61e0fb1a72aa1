#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <string_view>

#include <Eigen/Core>

#include "tendon/core/csv.hpp"
#include "tendon/core/errors.hpp"
#include "tendon/core/rng.hpp"
#include "tendon/dynamics/params.hpp"

namespace tendon::tasks {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec2 = Eigen::Vector2d;

/// Column layout of a kinematics row.
enum KinematicsColumn : Eigen::Index { kQ1 = 0, kQ2, kQd1, kQd2, kQdd1, kQdd2, kKinematicsWidth };

enum class ReferenceLabel { cyclical, point_to_point, exploration };

inline std::string_view to_string(ReferenceLabel l) {
  switch (l) {
    case ReferenceLabel::cyclical: return "cyclical";
    case ReferenceLabel::point_to_point: return "point_to_point";
    case ReferenceLabel::exploration: return "exploration";
  }
  return "";
}

inline constexpr double kSampleRate = 100.0;

struct ReferenceTrajectory {
  RowMatrix samples;  // T x 6: q1, q2, qd1, qd2, qdd1, qdd2
  ReferenceLabel label = ReferenceLabel::cyclical;
  double sample_rate = kSampleRate;

  Eigen::Index size() const noexcept { return samples.rows(); }
};

/// Number of samples covering `duration` seconds; partial samples are dropped.
inline Eigen::Index sample_count(double duration, double rate = kSampleRate) {
  return static_cast<Eigen::Index>(std::floor(duration * rate + 1e-9));
}

/// Sinusoidal joint motion with per-joint phase; derivatives are analytic.
struct Ellipse {
  Vec2 center = Vec2::Zero();
  Vec2 amplitude = Vec2::Zero();
  Vec2 phase = Vec2::Zero();
  double frequency = 1.0;  // Hz
};

inline RowMatrix sample_ellipse(const Ellipse& e, Eigen::Index n, double rate = kSampleRate) {
  RowMatrix out(n, kKinematicsWidth);
  const double w = 2.0 * std::numbers::pi * e.frequency;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate;
    for (int j = 0; j < 2; ++j) {
      const double arg = w * t + e.phase[j];
      out(i, kQ1 + j) = e.center[j] + e.amplitude[j] * std::sin(arg);
      out(i, kQd1 + j) = e.amplitude[j] * w * std::cos(arg);
      out(i, kQdd1 + j) = -e.amplitude[j] * w * w * std::sin(arg);
    }
  }
  return out;
}

/// Circle in joint space: q1 = c1 + A1 sin(2 pi f t), q2 = c2 + A2 sin(2 pi f t + pi/2).
inline ReferenceTrajectory cyclical_reference(double freq_hz, double cycles, const Vec2& center,
                                              const Vec2& amplitude,
                                              const std::array<Interval, 2>& limits) {
  if (!(freq_hz > 0)) throw std::invalid_argument("frequency must be positive");
  for (int j = 0; j < 2; ++j) {
    const double a = std::abs(amplitude[j]);
    if (center[j] - a < limits[j].lo || center[j] + a > limits[j].hi)
      throw LimitViolation("cyclical reference leaves the joint range");
  }
  Ellipse e{center, amplitude, Vec2(0.0, std::numbers::pi / 2), freq_hz};
  return {sample_ellipse(e, sample_count(cycles / freq_hz)), ReferenceLabel::cyclical, kSampleRate};
}

/// Targets held for `hold_s` each, drawn i.i.d. uniform over each joint range.
/// Desired velocity and acceleration are zero throughout.
inline ReferenceTrajectory p2p_reference(std::uint64_t seed, int n_points, double hold_s,
                                         const std::array<Interval, 2>& limits) {
  if (n_points < 1 || !(hold_s > 0)) throw std::invalid_argument("need n_points >= 1 and hold > 0");
  Rng rng(seed);
  const Eigen::Index per_hold = static_cast<Eigen::Index>(std::llround(hold_s * kSampleRate));
  RowMatrix out = RowMatrix::Zero(per_hold * n_points, kKinematicsWidth);
  for (int p = 0; p < n_points; ++p) {
    const double q1 = rng.uniform(limits[0].lo, limits[0].hi);
    const double q2 = rng.uniform(limits[1].lo, limits[1].hi);
    out.block(p * per_hold, kQ1, per_hold, 1).setConstant(q1);
    out.block(p * per_hold, kQ2, per_hold, 1).setConstant(q2);
  }
  return {std::move(out), ReferenceLabel::point_to_point, kSampleRate};
}

/// Random periodic reference used by locomotion exploration: centers in the
/// middle half of each joint range, amplitudes in [0.1, 0.6] rad clipped to
/// the range, and a uniform relative phase.
inline Ellipse sample_exploration_ellipse(Rng& rng, const std::array<Interval, 2>& limits,
                                          double period_s) {
  Ellipse e;
  e.frequency = 1.0 / period_s;
  for (int j = 0; j < 2; ++j) {
    const double quarter = 0.25 * limits[j].width();
    e.center[j] = rng.uniform(limits[j].lo + quarter, limits[j].hi - quarter);
    const double room = std::min(e.center[j] - limits[j].lo, limits[j].hi - e.center[j]);
    e.amplitude[j] = std::min(rng.uniform(0.1, 0.6), room);
  }
  e.phase = Vec2(0.0, rng.uniform(0.0, 2.0 * std::numbers::pi));
  return e;
}

inline ReferenceTrajectory exploration_reference(const Ellipse& e, int cycles) {
  return {sample_ellipse(e, sample_count(cycles / e.frequency)), ReferenceLabel::exploration,
          kSampleRate};
}

inline void write_reference_csv(std::ostream& out, const ReferenceTrajectory& ref) {
  CsvWriter csv(out);
  csv.header({"t", "q1", "q2", "qd1", "qd2", "qdd1", "qdd2"});
  for (Eigen::Index i = 0; i < ref.size(); ++i) {
    csv.field(static_cast<double>(i) / ref.sample_rate);
    for (Eigen::Index c = 0; c < kKinematicsWidth; ++c) csv.field(ref.samples(i, c));
    csv.end_row();
  }
}

}  // namespace tendon::tasks
