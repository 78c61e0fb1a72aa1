#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "tendon/core/errors.hpp"
#include "tendon/tasks/reference.hpp"

namespace tendon::tasks {

inline constexpr double kWashoutFraction = 0.25;

/// Per-joint RMSE over the samples after the washout prefix. Only the first
/// two columns (joint angles) are compared.
inline Vec2 rmse(const Eigen::Ref<const RowMatrix>& realized, const Eigen::Ref<const RowMatrix>& desired,
                 double washout = kWashoutFraction) {
  if (realized.rows() != desired.rows() || realized.cols() < 2 || desired.cols() < 2)
    throw LengthMismatch("rmse needs two angle series of equal length");
  if (!(washout >= 0.0 && washout < 1.0)) throw std::invalid_argument("washout must be in [0, 1)");
  const Eigen::Index n = realized.rows();
  const auto start = static_cast<Eigen::Index>(std::floor(washout * static_cast<double>(n)));
  const Eigen::Index kept = n - start;
  if (kept <= 0) return Vec2::Zero();
  Vec2 out;
  for (int j = 0; j < 2; ++j) {
    const auto diff = realized.col(j).tail(kept) - desired.col(j).tail(kept);
    out[j] = std::sqrt(diff.squaredNorm() / static_cast<double>(kept));
  }
  return out;
}

/// Sum over time and muscles of squared activation.
inline double energy(const Eigen::Ref<const RowMatrix>& activations) {
  return activations.squaredNorm();
}

/// Net forward chassis displacement: last x minus first x.
inline double locomotion_reward(const std::vector<double>& chassis_x) {
  if (chassis_x.empty()) throw std::invalid_argument("empty trajectory");
  return chassis_x.back() - chassis_x.front();
}

/// Per-tick dense reward; sums telescopically to locomotion_reward.
inline double step_reward(double x_before, double x_after) noexcept { return x_after - x_before; }

/// First index at which the series reaches `cap`, or -1.
inline long first_index_reaching(const std::vector<double>& series, double cap) {
  for (std::size_t i = 0; i < series.size(); ++i)
    if (series[i] >= cap) return static_cast<long>(i);
  return -1;
}

/// Trailing moving average with a window truncated at the start.
inline std::vector<double> moving_average(const std::vector<double>& v, std::size_t window) {
  std::vector<double> out(v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    sum += v[i];
    if (i >= window) sum -= v[i - window];
    out[i] = sum / static_cast<double>(std::min(i + 1, window));
  }
  return out;
}

}  // namespace tendon::tasks
