#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <Eigen/LU>

#include "tendon/core/errors.hpp"
#include "tendon/dynamics/muscle.hpp"
#include "tendon/dynamics/params.hpp"

namespace tendon {

using Mat2 = Eigen::Matrix2d;

/// Joint angles are measured from the downward vertical; positive q swings the
/// distal point toward +x. q2 is relative to link 1.
struct LimbState {
  Vec2 q = Vec2::Zero();
  Vec2 qd = Vec2::Zero();
  Vec2 qdd = Vec2::Zero();  // mean acceleration over the last step, limit constraint included
};

inline Mat2 mass_matrix(const Vec2& q, const LimbParams& p) noexcept {
  const double m1 = p.link_masses[0], m2 = p.link_masses[1];
  const double l1 = p.link_lengths[0];
  const double d1 = p.link_com_offsets[0], d2 = p.link_com_offsets[1];
  const double i1 = p.link_inertias[0], i2 = p.link_inertias[1];
  const double c2 = std::cos(q[1]);
  Mat2 m;
  m(0, 0) = i1 + i2 + m1 * d1 * d1 + m2 * (l1 * l1 + d2 * d2 + 2.0 * l1 * d2 * c2);
  m(0, 1) = i2 + m2 * (d2 * d2 + l1 * d2 * c2);
  m(1, 0) = m(0, 1);
  m(1, 1) = i2 + m2 * d2 * d2;
  return m;
}

/// Coriolis/centrifugal matrix from Christoffel symbols, so that
/// dM/dt - 2C is skew-symmetric.
inline Mat2 coriolis_matrix(const Vec2& q, const Vec2& qd, const LimbParams& p) noexcept {
  const double h = p.link_masses[1] * p.link_lengths[0] * p.link_com_offsets[1] * std::sin(q[1]);
  Mat2 c;
  c(0, 0) = -h * qd[1];
  c(0, 1) = -h * (qd[0] + qd[1]);
  c(1, 0) = h * qd[0];
  c(1, 1) = 0.0;
  return c;
}

inline Vec2 gravity_torque(const Vec2& q, const LimbParams& p) noexcept {
  const double m1 = p.link_masses[0], m2 = p.link_masses[1];
  const double l1 = p.link_lengths[0];
  const double d1 = p.link_com_offsets[0], d2 = p.link_com_offsets[1];
  const double s1 = std::sin(q[0]), s12 = std::sin(q[0] + q[1]);
  return {p.gravity * ((m1 * d1 + m2 * l1) * s1 + m2 * d2 * s12), p.gravity * m2 * d2 * s12};
}

/// Gravitational potential, zero with the limb hanging straight down.
inline double gravity_potential(const Vec2& q, const LimbParams& p) noexcept {
  const double m1 = p.link_masses[0], m2 = p.link_masses[1];
  const double l1 = p.link_lengths[0];
  const double d1 = p.link_com_offsets[0], d2 = p.link_com_offsets[1];
  return p.gravity * ((m1 * d1 + m2 * l1) * (1.0 - std::cos(q[0])) +
                      m2 * d2 * (1.0 - std::cos(q[0] + q[1])));
}

inline double spring_potential(const Vec2& q, const LimbParams& p) noexcept {
  const Vec3 l = tendon_lengths(q, p);
  double e = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double s = std::max(0.0, l[i] - p.muscles[i].l_rest);
    e += 0.5 * p.muscles[i].k * s * s;
  }
  return e;
}

inline double kinetic_energy(const Vec2& q, const Vec2& qd, const LimbParams& p) noexcept {
  return 0.5 * qd.dot(mass_matrix(q, p) * qd);
}

/// Kinetic + gravitational + parallel-spring energy.
inline double mechanical_energy(const LimbState& s, const LimbParams& p) noexcept {
  return kinetic_energy(s.q, s.qd, p) + gravity_potential(s.q, p) + spring_potential(s.q, p);
}

/// Solves M qdd + C qd + G + D qd = tau.
inline Vec2 forward_dynamics(const LimbState& s, const Vec2& tau, const LimbParams& p) noexcept {
  const Mat2 m = mass_matrix(s.q, p);
  const Vec2 damping{p.joint_damping[0] * s.qd[0], p.joint_damping[1] * s.qd[1]};
  const Vec2 rhs = tau - coriolis_matrix(s.q, s.qd, p) * s.qd - gravity_torque(s.q, p) - damping;
  // Closed-form 2x2 solve; M is SPD so det > 0.
  const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  return {(m(1, 1) * rhs[0] - m(0, 1) * rhs[1]) / det, (m(0, 0) * rhs[1] - m(1, 0) * rhs[0]) / det};
}

/// Per-step diagnostics, accumulated over the substeps of one call.
struct StepReport {
  double min_tension = 0.0;
  double max_tension = 0.0;
  int velocity_reversals = 0;  // sign flips of either joint velocity
  int substeps = 0;
};

/// Chatter flag: joint velocities flip sign more than `max_hz` times per
/// simulated second. Smooth motion under slowly varying drive stays far below.
inline bool chattering(const StepReport& r, double substep, double max_hz = 30.0) noexcept {
  return r.substeps > 0 && r.velocity_reversals > max_hz * r.substeps * substep;
}

inline int substeps_for(double dt, double h) {
  const double ratio = dt / h;
  const long long n = std::llround(ratio);
  if (n < 1 || std::abs(ratio - static_cast<double>(n)) > 1e-9 * std::max(1.0, ratio)) {
    throw std::invalid_argument("step duration must be a positive multiple of the substep");
  }
  return static_cast<int>(n);
}

namespace detail {

inline void enforce_joint_limits(Vec2& q, Vec2& qd, const LimbParams& p) noexcept {
  for (int j = 0; j < 2; ++j) {
    const Interval& lim = p.joint_limits[j];
    if (q[j] < lim.lo) {
      q[j] = lim.lo;
      if (qd[j] < 0) qd[j] = 0;
    } else if (q[j] > lim.hi) {
      q[j] = lim.hi;
      if (qd[j] > 0) qd[j] = 0;
    }
  }
}

// A joint that would leave its range this substep gets an impulse along its
// own coordinate, sized to land it exactly on the bound. Going through the
// inverse mass matrix keeps the impulse inelastic; zeroing the joint
// velocity alone can add kinetic energy through the inertial coupling.
inline void limit_impulse(Vec2& qd, const Vec2& q, double h, const LimbParams& p) {
  int active = -1, count = 0;
  Vec2 target = qd;
  for (int j = 0; j < 2; ++j) {
    const Interval& lim = p.joint_limits[j];
    const double next = q[j] + h * qd[j];
    if (next > lim.hi || next < lim.lo) {
      target[j] = ((next > lim.hi ? lim.hi : lim.lo) - q[j]) / h;
      active = j;
      ++count;
    }
  }
  if (count == 0) return;
  if (count == 2) {
    qd = target;
    return;
  }
  const Mat2 m = mass_matrix(q, p);
  const Vec2 minv_col = m.inverse().col(active);
  qd += minv_col * ((target[active] - qd[active]) / minv_col[active]);
}

inline void track_reversals(const Vec2& before, const Vec2& after, StepReport& r) noexcept {
  for (int j = 0; j < 2; ++j) {
    if ((before[j] > 0 && after[j] < 0) || (before[j] < 0 && after[j] > 0)) ++r.velocity_reversals;
  }
}

inline void track_tensions(const Vec3& f, StepReport& r) noexcept {
  if (r.substeps == 0) {
    r.min_tension = f.minCoeff();
    r.max_tension = f.maxCoeff();
  } else {
    r.min_tension = std::min(r.min_tension, f.minCoeff());
    r.max_tension = std::max(r.max_tension, f.maxCoeff());
  }
}

}  // namespace detail

/// Advances the fixed-base limb by `dt` with semi-implicit Euler substeps.
/// A joint about to cross a limit is stopped on it by an inelastic impulse;
/// the angle is then clamped against roundoff.
inline LimbState step(const LimbState& state, const ActivationSample& activation, double dt,
                      const LimbParams& p, StepReport* report = nullptr) {
  const int n = substeps_for(dt, p.substep);
  const double h = p.substep;
  const ActivationSample act = activation.clamped();
  LimbState s = state;
  for (int k = 0; k < n; ++k) {
    const TendonKinematics tk = tendon_kinematics(s.q, s.qd, p);
    const Vec3 f = muscle_forces(act, tk, p);
    const Vec2 qdd = forward_dynamics(s, joint_torques(f, p), p);
    const Vec2 qd_before = s.qd;
    s.qd += h * qdd;
    detail::limit_impulse(s.qd, s.q, h, p);
    s.q += h * s.qd;
    detail::enforce_joint_limits(s.q, s.qd, p);
    if (!s.q.allFinite() || !s.qd.allFinite() || !qdd.allFinite() ||
        s.qd.cwiseAbs().maxCoeff() > p.max_joint_speed) {
      throw NumericalDivergence("limb state diverged (joint speed bound " +
                                std::to_string(p.max_joint_speed) + " rad/s exceeded)");
    }
    if (report) {
      detail::track_tensions(f, *report);
      detail::track_reversals(qd_before, s.qd, *report);
      ++report->substeps;
    }
  }
  s.qdd = (s.qd - state.qd) / (n * h);
  return s;
}

}  // namespace tendon
