#pragma once

#include <stdexcept>

#include <Eigen/Core>

#include "tendon/core/errors.hpp"

namespace tendon::ppo {

struct AdvantageEstimate {
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;
};

/// Generalized advantage estimation over one trajectory. `bootstrap` is the
/// value of the state after the last reward (0 when the trajectory ended).
inline AdvantageEstimate gae(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
                             double gamma, double lambda, double bootstrap = 0.0) {
  if (rewards.size() != values.size())
    throw LengthMismatch("rewards and values must have equal lengths");
  if (gamma < 0 || gamma > 1 || lambda < 0 || lambda > 1)
    throw std::invalid_argument("gamma and lambda must lie in [0, 1]");
  const Eigen::Index n = rewards.size();
  AdvantageEstimate out;
  out.advantages.resize(n);
  double running = 0.0;
  for (Eigen::Index t = n; t-- > 0;) {
    const double next = t + 1 < n ? values[t + 1] : bootstrap;
    const double delta = rewards[t] + gamma * next - values[t];
    running = delta + gamma * lambda * running;
    out.advantages[t] = running;
  }
  out.returns = out.advantages + values;
  return out;
}

}  // namespace tendon::ppo
