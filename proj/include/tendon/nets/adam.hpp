#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Core>

#include "tendon/core/errors.hpp"

namespace tendon::nets {

struct AdamState {
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  std::int64_t step_count = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_size(Eigen::Index n, double learning_rate = 1e-3) {
    AdamState s;
    s.first_moment = Eigen::VectorXd::Zero(n);
    s.second_moment = Eigen::VectorXd::Zero(n);
    s.learning_rate = learning_rate;
    return s;
  }
};

/// Bias-corrected ADAM step, in place.
inline void adam_update(Eigen::Ref<Eigen::VectorXd> params, AdamState& state,
                        const Eigen::Ref<const Eigen::VectorXd>& grad) {
  if (params.size() != grad.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw LengthMismatch("ADAM state, parameters and gradient must have equal sizes");
  }
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  state.first_moment = state.beta1 * state.first_moment + (1.0 - state.beta1) * grad;
  state.second_moment =
      state.beta2 * state.second_moment + (1.0 - state.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  params.array() -= state.learning_rate * (state.first_moment.array() / c1) /
                    ((state.second_moment.array() / c2).sqrt() + state.epsilon);
}

}  // namespace tendon::nets
