#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "tendon/core/errors.hpp"

namespace tendon {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x) const noexcept { return x >= lo && x <= hi; }
  double clamp(double x) const noexcept { return std::clamp(x, lo, hi); }
  double width() const noexcept { return hi - lo; }
  double mid() const noexcept { return 0.5 * (lo + hi); }
};

/// One musculotendon: Hill-type contractile element in parallel with a
/// unilateral spring (k) and damper (b).
struct MuscleParams {
  double f_max = 500.0;   // N
  double l_opt = 0.3;     // m, also the musculotendon length at q = (0, 0)
  double l_rest = 0.3;    // m, slack length of the parallel spring
  double k = 0.0;         // N/m
  double b = 100.0;       // N s/m
  double v_max = 1.0;     // m/s
  std::array<double, 2> moment_arms{0.0, 0.0};  // m, per joint
};

struct LimbParams {
  std::array<double, 2> link_lengths{0.3, 0.3};
  std::array<double, 2> link_masses{1.0, 1.0};
  std::array<double, 2> link_com_offsets{0.15, 0.15};
  std::array<double, 2> link_inertias{1.0 * 0.3 * 0.3 / 12.0, 1.0 * 0.3 * 0.3 / 12.0};
  std::array<double, 2> joint_damping{0.05, 0.05};
  std::array<Interval, 2> joint_limits{Interval{-std::numbers::pi / 2, std::numbers::pi / 2},
                                       Interval{-std::numbers::pi / 2, std::numbers::pi / 2}};
  double gravity = 9.81;  // acts along -y
  std::array<MuscleParams, 3> muscles{};

  // Integration settings.
  double substep = 1e-3;            // s
  double max_joint_speed = 1e3;     // rad/s, divergence bound
  double damper_engagement = 1e-3;  // m, length over which the damper phases in
};

/// Chassis, gantry and ground used by the locomotion scene.
struct SceneParams {
  double chassis_mass = 2.0;
  double x_viscous_friction = 5.0;
  double x_coulomb_friction = 2.0;
  double gantry_stiffness = 500.0;
  double gantry_damping = 50.0;
  double gantry_rest_height = 0.62;
  double contact_stiffness = 2e4;
  double contact_damping = 200.0;
  double friction_mu = 0.8;
  double ground_height = 0.0;
  // Chassis Coulomb friction saturates linearly below this slip speed (m/s).
  double slip_velocity = 0.01;
};

/// Default 3-muscle routing: joint-1 flexor, bi-articular joint-1 extensor /
/// joint-2 flexor, joint-2 extensor.
inline LimbParams default_limb(double stiffness = 0.0) {
  LimbParams limb;
  const std::array<std::array<double, 2>, 3> arms{{{0.05, 0.0}, {-0.05, 0.05}, {0.0, -0.05}}};
  for (std::size_t i = 0; i < 3; ++i) {
    limb.muscles[i].moment_arms = arms[i];
    limb.muscles[i].k = stiffness;
  }
  return limb;
}

inline LimbParams with_stiffness(LimbParams limb, double stiffness) {
  for (auto& m : limb.muscles) m.k = stiffness;
  return limb;
}

/// True when the three tendon torque directions positively span the plane,
/// i.e. any joint torque is reachable with non-negative tensions.
inline bool tendon_routing_controllable(const LimbParams& limb) {
  const auto& m = limb.muscles;
  auto det = [](const std::array<double, 2>& u, const std::array<double, 2>& v) {
    return u[0] * v[1] - u[1] * v[0];
  };
  // Null vector of the 2x3 moment-arm matrix; positive spanning iff all its
  // entries are nonzero with a common sign.
  const std::array<double, 3> n{det(m[1].moment_arms, m[2].moment_arms),
                                det(m[2].moment_arms, m[0].moment_arms),
                                det(m[0].moment_arms, m[1].moment_arms)};
  const bool all_pos = n[0] > 0 && n[1] > 0 && n[2] > 0;
  const bool all_neg = n[0] < 0 && n[1] < 0 && n[2] < 0;
  return all_pos || all_neg;
}

inline void validate(const MuscleParams& m) {
  if (!(m.f_max > 0)) throw ConfigError("muscle f_max must be > 0");
  if (!(m.l_opt > 0)) throw ConfigError("muscle l_opt must be > 0");
  if (!(m.k >= 0)) throw ConfigError("muscle k must be >= 0");
  if (!(m.b >= 0)) throw ConfigError("muscle b must be >= 0");
  if (!(m.v_max > 0)) throw ConfigError("muscle v_max must be > 0");
  if (m.moment_arms[0] == 0.0 && m.moment_arms[1] == 0.0)
    throw ConfigError("muscle needs at least one nonzero moment arm");
}

inline void validate(const LimbParams& limb) {
  for (std::size_t j = 0; j < 2; ++j) {
    if (!(limb.link_lengths[j] > 0) || !(limb.link_masses[j] > 0) || !(limb.link_inertias[j] > 0))
      throw ConfigError("link lengths, masses and inertias must be > 0");
    if (!(limb.joint_limits[j].lo < limb.joint_limits[j].hi))
      throw ConfigError("joint limit interval must be nonempty");
    if (!(limb.joint_damping[j] >= 0)) throw ConfigError("joint damping must be >= 0");
  }
  if (!(limb.substep > 0)) throw ConfigError("substep must be > 0");
  for (const auto& m : limb.muscles) validate(m);
  if (!tendon_routing_controllable(limb))
    throw ConfigError("tendon routing cannot produce every joint torque direction");
  // Musculotendon lengths must stay positive over the whole joint box.
  for (const auto& m : limb.muscles) {
    double worst = m.l_opt;
    for (std::size_t j = 0; j < 2; ++j) {
      const double r = m.moment_arms[j];
      worst -= std::max(r * limb.joint_limits[j].lo, r * limb.joint_limits[j].hi);
    }
    if (!(worst > 0)) throw ConfigError("muscle reference length too short for joint range");
  }
}

inline void validate(const SceneParams& s) {
  const double nonneg[] = {s.x_viscous_friction, s.x_coulomb_friction, s.gantry_stiffness,
                           s.gantry_damping,     s.contact_stiffness,  s.contact_damping,
                           s.friction_mu};
  for (double v : nonneg)
    if (!(v >= 0)) throw ConfigError("scene stiffness, damping and friction values must be >= 0");
  if (!(s.chassis_mass > 0)) throw ConfigError("chassis_mass must be > 0");
  if (!(s.slip_velocity > 0)) throw ConfigError("slip_velocity must be > 0");
}

}  // namespace tendon
