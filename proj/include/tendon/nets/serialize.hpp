#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "tendon/core/errors.hpp"
#include "tendon/nets/mlp.hpp"

namespace tendon::nets {

namespace detail {

inline nlohmann::json vector_to_json(const VectorXd& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

inline VectorXd vector_from_json(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace detail

/// Self-describing JSON form. Doubles are written in shortest round-trip
/// form, so load(save(m)) == m bit for bit.
inline nlohmann::json to_json(const MlpModel& model) {
  nlohmann::json j;
  j["format"] = "tendon-mlp";
  j["version"] = 1;
  j["layer_sizes"] = model.layer_sizes();
  j["hidden_activation"] = std::string(to_string(model.hidden_activation()));
  j["output_activation"] = std::string(to_string(model.output_activation()));
  j["input_mean"] = detail::vector_to_json(model.input_mean());
  j["input_scale"] = detail::vector_to_json(model.input_scale());
  j["params"] = detail::vector_to_json(model.params());
  return j;
}

inline MlpModel mlp_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "tendon-mlp") throw ConfigError("not a tendon-mlp document");
  MlpModel model(j.at("layer_sizes").get<std::vector<int>>(),
                 activation_from_string(j.at("hidden_activation").get<std::string>()),
                 activation_from_string(j.at("output_activation").get<std::string>()));
  VectorXd params = detail::vector_from_json(j.at("params"));
  if (params.size() != model.params().size())
    throw ConfigError("parameter count does not match layer sizes");
  model.params() = std::move(params);
  VectorXd mean = detail::vector_from_json(j.at("input_mean"));
  VectorXd scale = detail::vector_from_json(j.at("input_scale"));
  if (mean.size() > 0) model.set_standardization(std::move(mean), std::move(scale));
  return model;
}

inline void save_mlp(const MlpModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << to_json(model).dump(1) << '\n';
}

inline MlpModel load_mlp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  return mlp_from_json(nlohmann::json::parse(in));
}

}  // namespace tendon::nets
