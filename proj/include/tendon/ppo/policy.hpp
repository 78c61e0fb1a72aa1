#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include <Eigen/Core>

#include "tendon/core/rng.hpp"
#include "tendon/dynamics/scene.hpp"
#include "tendon/nets/mlp.hpp"
#include "tendon/nets/serialize.hpp"

namespace tendon::ppo {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr int kObservationSize = 8;
inline constexpr int kActionSize = 3;

/// Fixed affine scaling of the observation channels:
/// obs = (raw - offset) * scale, channel order q1, q2, qd1, qd2, y, vx, vy, contact.
struct ObservationScale {
  std::array<double, kObservationSize> offset{0, 0, 0, 0, 0.55, 0, 0, 0};
  std::array<double, kObservationSize> scale{1, 1, 0.1, 0.1, 10, 1, 1, 1};
};

inline VectorXd observe(const SceneState& s, const ObservationScale& sc = {}) {
  const std::array<double, kObservationSize> raw{
      s.limb.q[0], s.limb.q[1], s.limb.qd[0], s.limb.qd[1], s.y, s.vx, s.vy,
      s.foot_contact ? 1.0 : 0.0};
  VectorXd obs(kObservationSize);
  for (int i = 0; i < kObservationSize; ++i) obs[i] = (raw[i] - sc.offset[i]) * sc.scale[i];
  return obs;
}

/// Diagonal Gaussian policy with a state-independent log standard deviation,
/// plus a separate state-value network.
struct PolicyModel {
  nets::MlpModel mean;
  VectorXd log_std;
  nets::MlpModel value;

  int observation_size() const noexcept { return mean.input_size(); }
  int action_size() const noexcept { return mean.output_size(); }
};

struct PolicyShape {
  int observation_size = kObservationSize;
  int action_size = kActionSize;
  std::vector<int> hidden{64, 64};
  double initial_log_std = std::log(0.3);
  // Initial action mean; the last mean layer starts with small weights so the
  // untrained policy explores around this value.
  double initial_action = 0.5;
  double output_weight_scale = 0.01;
};

inline PolicyModel init_policy(const PolicyShape& shape, std::uint64_t seed) {
  std::vector<int> mean_sizes{shape.observation_size};
  mean_sizes.insert(mean_sizes.end(), shape.hidden.begin(), shape.hidden.end());
  std::vector<int> value_sizes = mean_sizes;
  mean_sizes.push_back(shape.action_size);
  value_sizes.push_back(1);

  PolicyModel p;
  p.mean = nets::init_mlp(mean_sizes, nets::Activation::identity, derive_seed(seed, 1));
  p.value = nets::init_mlp(value_sizes, nets::Activation::identity, derive_seed(seed, 2));
  const std::size_t last = p.mean.num_layers() - 1;
  p.mean.weight(last) *= shape.output_weight_scale;
  p.mean.bias(last).setConstant(shape.initial_action);
  p.log_std = VectorXd::Constant(shape.action_size, shape.initial_log_std);
  return p;
}

/// Log density of `action` under N(mean, diag(exp(log_std))^2).
inline double log_prob(const Eigen::Ref<const VectorXd>& mean, const VectorXd& log_std,
                       const Eigen::Ref<const VectorXd>& action) {
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  double lp = 0.0;
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    const double z = (action[i] - mean[i]) * std::exp(-log_std[i]);
    lp += -0.5 * z * z - log_std[i] - half_log_2pi;
  }
  return lp;
}

inline double entropy(const VectorXd& log_std) {
  const double per_dim = 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);
  return log_std.sum() + per_dim * static_cast<double>(log_std.size());
}

/// Draws a raw (unclamped) action; clamping belongs to the environment.
inline VectorXd sample_action(const Eigen::Ref<const VectorXd>& mean, const VectorXd& log_std,
                              Rng& rng) {
  VectorXd a(mean.size());
  for (Eigen::Index i = 0; i < mean.size(); ++i) a[i] = mean[i] + std::exp(log_std[i]) * rng.normal();
  return a;
}

/// Checkpoint form: both networks in the nets format plus the log std.
inline nlohmann::json to_json(const PolicyModel& p) {
  return {{"format", "tendon-policy"},
          {"version", 1},
          {"mean", nets::to_json(p.mean)},
          {"log_std", nets::detail::vector_to_json(p.log_std)},
          {"value", nets::to_json(p.value)}};
}

inline PolicyModel policy_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "tendon-policy") throw ConfigError("not a tendon-policy document");
  PolicyModel p{nets::mlp_from_json(j.at("mean")), nets::detail::vector_from_json(j.at("log_std")),
                nets::mlp_from_json(j.at("value"))};
  if (p.log_std.size() != p.action_size()) throw ConfigError("log_std size does not match the action size");
  return p;
}

}  // namespace tendon::ppo
