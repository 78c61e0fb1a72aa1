#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "tendon/core/errors.hpp"
#include "tendon/dynamics/limb.hpp"
#include "tendon/dynamics/params.hpp"

namespace tendon {

/// Locomotion scene: the limb hangs from a chassis (hip at (x, y)) that slides
/// along x with friction and is held up by a vertical gantry spring-damper.
struct SceneState {
  double x = 0.0;
  double y = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  LimbState limb;
  bool foot_contact = false;
};

struct ContactReport {
  double normal_force = 0.0;
  double tangential_force = 0.0;
  double penetration = 0.0;
  double max_normal_force = 0.0;
  double max_tangential_ratio = 0.0;  // |F_t| / (mu N) when N > 0
  double max_penetration = 0.0;
  StepReport limb;
};

inline double total_mass(const SceneParams& s, const LimbParams& p) noexcept {
  return s.chassis_mass + p.link_masses[0] + p.link_masses[1];
}

/// Chassis height where the gantry carries the full weight.
inline double gantry_equilibrium(const SceneParams& s, const LimbParams& p) noexcept {
  return s.gantry_rest_height - total_mass(s, p) * p.gravity / s.gantry_stiffness;
}

inline Vec2 foot_offset(const Vec2& q, const LimbParams& p) noexcept {
  const double l1 = p.link_lengths[0], l2 = p.link_lengths[1];
  return {l1 * std::sin(q[0]) + l2 * std::sin(q[0] + q[1]),
          -l1 * std::cos(q[0]) - l2 * std::cos(q[0] + q[1])};
}

/// Hanging limb, chassis at the gantry equilibrium, everything at rest.
inline SceneState initial_scene_state(const SceneParams& s, const LimbParams& p) noexcept {
  SceneState st;
  st.y = gantry_equilibrium(s, p);
  return st;
}

namespace detail {

// Generalized coordinates z = (x, y, q1, q2).
using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;
using Mat24 = Eigen::Matrix<double, 2, 4>;

inline Mat24 foot_jacobian(const Vec2& q, const LimbParams& p) noexcept {
  const double l1 = p.link_lengths[0], l2 = p.link_lengths[1];
  const double c1 = std::cos(q[0]), s1 = std::sin(q[0]);
  const double c12 = std::cos(q[0] + q[1]), s12 = std::sin(q[0] + q[1]);
  Mat24 j;
  j << 1.0, 0.0, l1 * c1 + l2 * c12, l2 * c12,  //
      0.0, 1.0, l1 * s1 + l2 * s12, l2 * s12;
  return j;
}

inline double saturate(double v, double scale) noexcept { return std::clamp(v / scale, -1.0, 1.0); }

// Joint limits on a floating base. Clamping a joint velocity directly would
// drop the reaction on the chassis, so a joint that would leave its range
// this substep gets a generalized impulse along its coordinate, sized to land
// it exactly on the bound.
inline void limit_impulse(Vec4& zd, const Vec2& q, double h, const Eigen::LLT<Mat4>& llt,
                          const LimbParams& p) {
  int active[2];
  double target[2];
  int n = 0;
  for (int j = 0; j < 2; ++j) {
    const Interval& lim = p.joint_limits[j];
    const double next = q[j] + h * zd[2 + j];
    if (next > lim.hi) {
      active[n] = j;
      target[n++] = (lim.hi - q[j]) / h;
    } else if (next < lim.lo) {
      active[n] = j;
      target[n++] = (lim.lo - q[j]) / h;
    }
  }
  if (n == 0) return;
  Eigen::Matrix<double, 4, 2> cols = Eigen::Matrix<double, 4, 2>::Zero();
  for (int i = 0; i < n; ++i) cols(2 + active[i], i) = 1.0;
  const Eigen::Matrix<double, 4, 2> minv = llt.solve(cols);
  if (n == 1) {
    const double lambda = (target[0] - zd[2 + active[0]]) / minv(2 + active[0], 0);
    zd += minv.col(0) * lambda;
  } else {
    const Eigen::Matrix2d a = minv.bottomRows<2>();
    const Eigen::Vector2d lambda = a.ldlt().solve(
        Eigen::Vector2d(target[0] - zd[2 + active[0]], target[1] - zd[2 + active[1]]));
    zd += minv * lambda;
  }
}

}  // namespace detail

/// Advances the scene by `dt` using the same substep and limit handling as the
/// fixed-base limb. Foot-ground contact is a penalty spring-damper (normal
/// force clamped at zero) with regularized Coulomb friction; the contact
/// wrench enters all four coordinates through the foot Jacobian.
inline SceneState scene_step(const SceneState& state, const ActivationSample& activation, double dt,
                             const SceneParams& sp, const LimbParams& p,
                             ContactReport* report = nullptr) {
  using detail::Mat4;
  using detail::Vec4;
  const int n = substeps_for(dt, p.substep);
  const double h = p.substep;
  const ActivationSample act = activation.clamped();

  const double m1 = p.link_masses[0], m2 = p.link_masses[1];
  const double l1 = p.link_lengths[0];
  const double d1 = p.link_com_offsets[0], d2 = p.link_com_offsets[1];
  const double mt = total_mass(sp, p);

  SceneState s = state;
  for (int k = 0; k < n; ++k) {
    const Vec2& q = s.limb.q;
    const Vec2& qd = s.limb.qd;
    const double c1 = std::cos(q[0]), s1 = std::sin(q[0]);
    const double c12 = std::cos(q[0] + q[1]), s12 = std::sin(q[0] + q[1]);
    const double w1 = qd[0], w12 = qd[0] + qd[1];

    Mat4 mass = Mat4::Zero();
    mass(0, 0) = mt;
    mass(1, 1) = mt;
    mass(0, 2) = mass(2, 0) = m1 * d1 * c1 + m2 * (l1 * c1 + d2 * c12);
    mass(0, 3) = mass(3, 0) = m2 * d2 * c12;
    mass(1, 2) = mass(2, 1) = m1 * d1 * s1 + m2 * (l1 * s1 + d2 * s12);
    mass(1, 3) = mass(3, 1) = m2 * d2 * s12;
    mass.bottomRightCorner<2, 2>() = mass_matrix(q, p);

    Vec4 bias;
    bias[0] = -m1 * d1 * s1 * w1 * w1 - m2 * (l1 * s1 * w1 * w1 + d2 * s12 * w12 * w12);
    bias[1] = m1 * d1 * c1 * w1 * w1 + m2 * (l1 * c1 * w1 * w1 + d2 * c12 * w12 * w12);
    bias.tail<2>() = coriolis_matrix(q, qd, p) * qd;

    Vec4 gravity;
    gravity << 0.0, mt * p.gravity, gravity_torque(q, p);

    // Applied generalized forces.
    const TendonKinematics tk = tendon_kinematics(q, qd, p);
    const Vec3 f = muscle_forces(act, tk, p);
    const Vec2 tau = joint_torques(f, p);
    Vec4 applied;
    applied[0] = -sp.x_viscous_friction * s.vx -
                 sp.x_coulomb_friction * detail::saturate(s.vx, sp.slip_velocity);
    applied[1] = -sp.gantry_stiffness * (s.y - sp.gantry_rest_height) - sp.gantry_damping * s.vy;
    applied[2] = tau[0] - p.joint_damping[0] * qd[0];
    applied[3] = tau[1] - p.joint_damping[1] * qd[1];

    // Foot contact. The normal force is a penalty spring-damper; friction is
    // solved implicitly: the tangential force that would stop the foot within
    // this substep, capped at mu N. An explicit regularized law is unstable
    // here because the foot's effective mass is small.
    const Vec2 foot_rel = foot_offset(q, p);
    const double foot_y = s.y + foot_rel[1];
    const double penetration = sp.ground_height - foot_y;
    double normal = 0.0, tangential = 0.0;
    const Eigen::LLT<Mat4> llt(mass);
    Vec4 zdd;
    if (penetration > 0.0) {
      const detail::Mat24 jac = detail::foot_jacobian(q, p);
      Vec4 zd;
      zd << s.vx, s.vy, qd[0], qd[1];
      const Eigen::Vector2d foot_vel = jac * zd;
      normal = std::max(0.0, sp.contact_stiffness * penetration - sp.contact_damping * foot_vel[1]);
      applied += jac.row(1).transpose() * normal;
      zdd = llt.solve(applied - bias - gravity);
      const Vec4 jt = jac.row(0).transpose();
      const Vec4 minv_jt = llt.solve(jt);
      const double predicted = jt.dot(zd + h * zdd);
      const double limit = sp.friction_mu * normal;
      tangential = std::clamp(-predicted / (h * jt.dot(minv_jt)), -limit, limit);
      zdd += minv_jt * tangential;
    } else {
      zdd = llt.solve(applied - bias - gravity);
    }

    const Vec2 qd_before = s.limb.qd;
    Vec4 zd;
    zd << s.vx, s.vy, qd[0], qd[1];
    zd += h * zdd;
    detail::limit_impulse(zd, q, h, llt, p);
    s.vx = zd[0];
    s.vy = zd[1];
    s.limb.qd = zd.tail<2>();
    s.x += h * s.vx;
    s.y += h * s.vy;
    s.limb.q += h * s.limb.qd;
    detail::enforce_joint_limits(s.limb.q, s.limb.qd, p);
    s.foot_contact = penetration > 0.0;

    if (!std::isfinite(s.x) || !std::isfinite(s.y) || !std::isfinite(s.vx) ||
        !std::isfinite(s.vy) || !s.limb.q.allFinite() || !s.limb.qd.allFinite() ||
        s.limb.qd.cwiseAbs().maxCoeff() > p.max_joint_speed ||
        std::max(std::abs(s.vx), std::abs(s.vy)) > p.max_joint_speed) {
      throw NumericalDivergence("scene state diverged");
    }
    if (report) {
      report->normal_force = normal;
      report->tangential_force = tangential;
      report->penetration = std::max(0.0, penetration);
      report->max_normal_force = std::max(report->max_normal_force, normal);
      report->max_penetration = std::max(report->max_penetration, report->penetration);
      if (normal > 0.0 && sp.friction_mu > 0.0) {
        report->max_tangential_ratio =
            std::max(report->max_tangential_ratio, std::abs(tangential) / (sp.friction_mu * normal));
      }
      detail::track_tensions(f, report->limb);
      detail::track_reversals(qd_before, s.limb.qd, report->limb);
      ++report->limb.substeps;
    }
  }
  s.limb.qdd = (s.limb.qd - state.limb.qd) / (n * h);
  // Contact flag reflects the final configuration.
  s.foot_contact = sp.ground_height - (s.y + foot_offset(s.limb.q, p)[1]) > 0.0;
  return s;
}

}  // namespace tendon
