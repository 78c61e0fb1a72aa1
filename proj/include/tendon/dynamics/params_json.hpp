#pragma once

#include <array>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>

#include <json.hpp>

#include "tendon/core/errors.hpp"
#include "tendon/dynamics/params.hpp"

namespace tendon {

using Json = nlohmann::json;

namespace detail {

inline void reject_unknown(const Json& j, std::initializer_list<std::string_view> known,
                           std::string_view what) {
  if (!j.is_object()) throw ConfigError(std::string(what) + " must be a JSON object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (auto k : known) ok = ok || item.key() == k;
    if (!ok) throw ConfigError("unknown field '" + item.key() + "' in " + std::string(what));
  }
}

template <class T>
void read_field(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

inline void read_interval(const Json& j, Interval& out) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("joint limit must be [lo, hi]");
  out = Interval{j[0].get<double>(), j[1].get<double>()};
}

}  // namespace detail

inline Json to_json(const MuscleParams& m) {
  return Json{{"f_max", m.f_max}, {"l_opt", m.l_opt}, {"l_rest", m.l_rest},
              {"k", m.k},         {"b", m.b},         {"v_max", m.v_max},
              {"moment_arms", m.moment_arms}};
}

inline Json to_json(const LimbParams& p) {
  Json muscles = Json::array();
  for (const auto& m : p.muscles) muscles.push_back(to_json(m));
  return Json{{"link_lengths", p.link_lengths},
              {"link_masses", p.link_masses},
              {"link_com_offsets", p.link_com_offsets},
              {"link_inertias", p.link_inertias},
              {"joint_damping", p.joint_damping},
              {"joint_limits",
               {{p.joint_limits[0].lo, p.joint_limits[0].hi},
                {p.joint_limits[1].lo, p.joint_limits[1].hi}}},
              {"gravity", p.gravity},
              {"muscles", muscles},
              {"substep", p.substep},
              {"max_joint_speed", p.max_joint_speed},
              {"damper_engagement", p.damper_engagement}};
}

inline Json to_json(const SceneParams& s) {
  return Json{{"chassis_mass", s.chassis_mass},
              {"x_viscous_friction", s.x_viscous_friction},
              {"x_coulomb_friction", s.x_coulomb_friction},
              {"gantry_stiffness", s.gantry_stiffness},
              {"gantry_damping", s.gantry_damping},
              {"gantry_rest_height", s.gantry_rest_height},
              {"contact_stiffness", s.contact_stiffness},
              {"contact_damping", s.contact_damping},
              {"friction_mu", s.friction_mu},
              {"ground_height", s.ground_height},
              {"slip_velocity", s.slip_velocity}};
}

/// Fields absent from `j` keep the values already in `m`.
inline void update_from_json(const Json& j, MuscleParams& m) {
  detail::reject_unknown(j, {"f_max", "l_opt", "l_rest", "k", "b", "v_max", "moment_arms"},
                         "muscle");
  detail::read_field(j, "f_max", m.f_max);
  detail::read_field(j, "l_opt", m.l_opt);
  detail::read_field(j, "l_rest", m.l_rest);
  detail::read_field(j, "k", m.k);
  detail::read_field(j, "b", m.b);
  detail::read_field(j, "v_max", m.v_max);
  detail::read_field(j, "moment_arms", m.moment_arms);
}

inline void update_from_json(const Json& j, LimbParams& p) {
  detail::reject_unknown(j,
                         {"link_lengths", "link_masses", "link_com_offsets", "link_inertias",
                          "joint_damping", "joint_limits", "gravity", "muscles", "substep",
                          "max_joint_speed", "damper_engagement"},
                         "limb");
  detail::read_field(j, "link_lengths", p.link_lengths);
  detail::read_field(j, "link_masses", p.link_masses);
  detail::read_field(j, "link_com_offsets", p.link_com_offsets);
  detail::read_field(j, "link_inertias", p.link_inertias);
  detail::read_field(j, "joint_damping", p.joint_damping);
  detail::read_field(j, "gravity", p.gravity);
  detail::read_field(j, "substep", p.substep);
  detail::read_field(j, "max_joint_speed", p.max_joint_speed);
  detail::read_field(j, "damper_engagement", p.damper_engagement);
  if (j.contains("joint_limits")) {
    const Json& lim = j.at("joint_limits");
    if (!lim.is_array() || lim.size() != 2) throw ConfigError("joint_limits needs 2 intervals");
    detail::read_interval(lim[0], p.joint_limits[0]);
    detail::read_interval(lim[1], p.joint_limits[1]);
  }
  if (j.contains("muscles")) {
    const Json& ms = j.at("muscles");
    if (!ms.is_array() || ms.size() != 3) throw ConfigError("limb needs exactly 3 muscles");
    for (std::size_t i = 0; i < 3; ++i) update_from_json(ms[i], p.muscles[i]);
  }
}

inline void update_from_json(const Json& j, SceneParams& s) {
  detail::reject_unknown(j,
                         {"chassis_mass", "x_viscous_friction", "x_coulomb_friction",
                          "gantry_stiffness", "gantry_damping", "gantry_rest_height",
                          "contact_stiffness", "contact_damping", "friction_mu", "ground_height",
                          "slip_velocity"},
                         "scene");
  detail::read_field(j, "chassis_mass", s.chassis_mass);
  detail::read_field(j, "x_viscous_friction", s.x_viscous_friction);
  detail::read_field(j, "x_coulomb_friction", s.x_coulomb_friction);
  detail::read_field(j, "gantry_stiffness", s.gantry_stiffness);
  detail::read_field(j, "gantry_damping", s.gantry_damping);
  detail::read_field(j, "gantry_rest_height", s.gantry_rest_height);
  detail::read_field(j, "contact_stiffness", s.contact_stiffness);
  detail::read_field(j, "contact_damping", s.contact_damping);
  detail::read_field(j, "friction_mu", s.friction_mu);
  detail::read_field(j, "ground_height", s.ground_height);
  detail::read_field(j, "slip_velocity", s.slip_velocity);
}

/// Limb parameters from JSON on top of the default limb; validated.
inline LimbParams limb_from_json(const Json& j) {
  LimbParams p = default_limb();
  update_from_json(j, p);
  validate(p);
  return p;
}

inline SceneParams scene_from_json(const Json& j) {
  SceneParams s;
  update_from_json(j, s);
  validate(s);
  return s;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace tendon
