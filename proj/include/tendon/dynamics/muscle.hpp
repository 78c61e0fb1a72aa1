#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include <Eigen/Core>

#include "tendon/dynamics/params.hpp"

namespace tendon {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

/// Normalized active force-length curve; fl(1) = 1.
inline double force_length(double normalized_length) noexcept {
  const double z = (normalized_length - 1.0) / 0.45;
  return std::exp(-z * z);
}

/// Normalized force-velocity curve. `shortening` is the shortening speed over
/// v_max (negative while lengthening). fv(0) = 1, zero at or beyond v_max,
/// and saturated at 1.5 for lengthening faster than v_max / 11, where the
/// rational branch reaches its cap. Continuous and non-increasing.
inline double force_velocity(double shortening) noexcept {
  constexpr double kCap = 1.5;
  constexpr double kCapSpeed = -1.0 / 11.0;
  if (shortening <= kCapSpeed) return kCap;
  return std::clamp((1.0 - shortening) / (1.0 + 3.0 * shortening), 0.0, kCap);
}

/// Muscle activation triple. Components are clamped to [0, 1] on use.
struct ActivationSample {
  Vec3 a = Vec3::Zero();

  ActivationSample clamped() const noexcept {
    ActivationSample out;
    for (std::size_t i = 0; i < 3; ++i) {
      out.a[i] = std::isfinite(a[i]) ? std::clamp(a[i], 0.0, 1.0) : 0.0;
    }
    return out;
  }
};

struct TendonKinematics {
  Vec3 length = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();  // lengthening rate
};

/// Linear excursion model with constant moment arms:
/// l_i = l_opt_i - sum_j R_ij q_j, dl_i/dt = -sum_j R_ij qd_j.
inline TendonKinematics tendon_kinematics(const Vec2& q, const Vec2& qd,
                                          const LimbParams& limb) noexcept {
  TendonKinematics out;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& r = limb.muscles[i].moment_arms;
    out.length[i] = limb.muscles[i].l_opt - (r[0] * q[0] + r[1] * q[1]);
    out.velocity[i] = -(r[0] * qd[0] + r[1] * qd[1]);
  }
  return out;
}

inline Vec3 tendon_lengths(const Vec2& q, const LimbParams& limb) noexcept {
  return tendon_kinematics(q, Vec2::Zero(), limb).length;
}

/// Tendon tension for one muscle: active FLV drive plus the parallel spring
/// and damper, clamped at zero. The spring engages only above l_rest; the
/// damper ramps in over `engagement` metres of stretch so the tension stays
/// continuous at the slack point.
inline double muscle_force(double activation, double length, double lengthening_rate,
                           const MuscleParams& m, double engagement = 1e-3) noexcept {
  const double active = activation * m.f_max * force_length(length / m.l_opt) *
                        force_velocity(-lengthening_rate / m.v_max);
  const double stretch = std::max(0.0, length - m.l_rest);
  const double engaged = engagement > 0 ? std::min(1.0, stretch / engagement) : (stretch > 0 ? 1.0 : 0.0);
  const double passive = m.k * stretch + m.b * lengthening_rate * engaged;
  return std::max(0.0, active + passive);
}

inline Vec3 muscle_forces(const ActivationSample& act, const TendonKinematics& tk,
                          const LimbParams& limb) noexcept {
  Vec3 f;
  for (std::size_t i = 0; i < 3; ++i) {
    f[i] = muscle_force(act.a[i], tk.length[i], tk.velocity[i], limb.muscles[i],
                        limb.damper_engagement);
  }
  return f;
}

/// tau = R^T f. A positive moment arm means tension drives that joint positive.
inline Vec2 joint_torques(const Vec3& tensions, const LimbParams& limb) noexcept {
  Vec2 tau = Vec2::Zero();
  for (std::size_t i = 0; i < 3; ++i) {
    tau[0] += limb.muscles[i].moment_arms[0] * tensions[i];
    tau[1] += limb.muscles[i].moment_arms[1] * tensions[i];
  }
  return tau;
}

}  // namespace tendon
