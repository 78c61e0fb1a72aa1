#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "tendon/core/errors.hpp"
#include "tendon/core/rng.hpp"
#include "tendon/dynamics/scene.hpp"
#include "tendon/g2p/babble.hpp"
#include "tendon/g2p/locomotion.hpp"
#include "tendon/nets/adam.hpp"
#include "tendon/nets/mlp.hpp"
#include "tendon/ppo/gae.hpp"
#include "tendon/ppo/policy.hpp"

namespace tendon::ppo {

using nets::RowMatrix;

/// One rollout, one row per timestep. `actions` are the raw Gaussian samples
/// that the log-probabilities refer to, before the environment clamps them.
struct RolloutBatch {
  RowMatrix observations;
  RowMatrix actions;
  VectorXd log_probs;
  VectorXd rewards;
  VectorXd values;
  VectorXd advantages;
  VectorXd returns;

  Eigen::Index size() const noexcept { return observations.rows(); }
};

struct PpoConfig {
  int episodes = 300;
  int steps_per_episode = 1000;
  double gamma = 0.99;
  double lambda = 0.95;
  double clip_epsilon = 0.2;
  double learning_rate = 3e-4;
  int update_epochs = 10;
  int minibatch_size = 64;
  double value_coefficient = 0.5;
  double entropy_coefficient = 0.0;
  double settle_s = 1.0;
  PolicyShape shape{};
  ObservationScale observation_scale{};
};

/// Gradients of the PPO loss, split like the policy's parameter groups.
struct PolicyGradient {
  VectorXd mean;
  VectorXd log_std;
  VectorXd value;
};

struct PpoLoss {
  double policy_loss = 0.0;  // -E[min(rho A, clip(rho) A)]
  double value_loss = 0.0;   // E[(V - R)^2]
  double entropy = 0.0;
  double total = 0.0;        // policy + c_v value - c_e entropy
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;
  PolicyGradient gradient;
};

/// Clipped-surrogate loss and its gradient over the rows `rows` of `batch`.
inline PpoLoss ppo_loss(const PolicyModel& policy, const RolloutBatch& batch,
                        const std::vector<Eigen::Index>& rows, double clip_epsilon,
                        double value_coefficient, double entropy_coefficient) {
  if (rows.empty()) throw std::invalid_argument("ppo_loss needs at least one row");
  const auto n = static_cast<Eigen::Index>(rows.size());
  const int obs = policy.observation_size();
  const int act = policy.action_size();
  MatrixXd x(obs, n), a(act, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x.col(i) = batch.observations.row(rows[i]).transpose();
    a.col(i) = batch.actions.row(rows[i]).transpose();
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  const VectorXd inv_var = (-2.0 * policy.log_std).array().exp();

  const nets::ForwardCache mean_cache = nets::forward_cached(policy.mean, x);
  const MatrixXd& mu = mean_cache.output();
  MatrixXd d_mu(act, n);
  VectorXd d_log_std = VectorXd::Zero(act);
  PpoLoss out;
  int clipped = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index r = rows[i];
    const double logp = log_prob(mu.col(i), policy.log_std, a.col(i));
    const double ratio = std::exp(logp - batch.log_probs[r]);
    const double adv = batch.advantages[r];
    const double bounded = std::clamp(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon);
    const double surr1 = ratio * adv;
    const double surr2 = bounded * adv;
    out.policy_loss -= std::min(surr1, surr2) * inv_n;
    out.mean_ratio += ratio * inv_n;
    if (std::abs(ratio - 1.0) > clip_epsilon) ++clipped;
    // d(policy_loss)/d(logp); zero where the clipped branch is the minimum.
    const double g = surr1 <= surr2 ? -ratio * adv * inv_n : 0.0;
    const VectorXd diff = a.col(i) - mu.col(i);
    d_mu.col(i) = g * diff.cwiseProduct(inv_var);
    d_log_std.array() += g * (diff.array().square() * inv_var.array() - 1.0);
  }
  out.clip_fraction = static_cast<double>(clipped) * inv_n;
  out.entropy = entropy(policy.log_std);
  d_log_std.array() -= entropy_coefficient;

  const nets::ForwardCache value_cache = nets::forward_cached(policy.value, x);
  Eigen::RowVectorXd verr(n);
  for (Eigen::Index i = 0; i < n; ++i) verr[i] = value_cache.output()(0, i) - batch.returns[rows[i]];
  out.value_loss = verr.squaredNorm() * inv_n;

  out.gradient.mean = nets::backward(policy.mean, mean_cache, std::move(d_mu));
  out.gradient.log_std = std::move(d_log_std);
  out.gradient.value =
      nets::backward(policy.value, value_cache, MatrixXd(2.0 * value_coefficient * inv_n * verr));
  out.total = out.policy_loss + value_coefficient * out.value_loss - entropy_coefficient * out.entropy;
  return out;
}

/// Policy plus the optimizer state that persists across updates.
struct PpoLearner {
  PolicyModel policy;
  nets::AdamState mean_adam;
  nets::AdamState log_std_adam;
  nets::AdamState value_adam;

  PpoLearner() = default;
  PpoLearner(PolicyModel p, double learning_rate)
      : policy(std::move(p)),
        mean_adam(nets::AdamState::for_size(policy.mean.params().size(), learning_rate)),
        log_std_adam(nets::AdamState::for_size(policy.log_std.size(), learning_rate)),
        value_adam(nets::AdamState::for_size(policy.value.params().size(), learning_rate)) {}
};

struct UpdateDiagnostics {
  double policy_loss = 0.0;  // mean over the first epoch's minibatches
  double value_loss = 0.0;
  double entropy = 0.0;
  double mean_ratio = 0.0;     // updated vs. behaviour policy, whole batch
  double clip_fraction = 0.0;  // same, fraction outside the clip interval
};

/// Several epochs of minibatch ADAM on the clipped surrogate.
inline UpdateDiagnostics ppo_update(PpoLearner& learner, const RolloutBatch& batch,
                                    const PpoConfig& config, Rng& rng) {
  if (batch.size() == 0) throw std::invalid_argument("ppo_update needs a nonempty batch");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(batch.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const auto mb = static_cast<std::size_t>(std::max(1, config.minibatch_size));
  UpdateDiagnostics diag;
  int first_epoch_batches = 0;
  std::vector<Eigen::Index> rows;
  for (int epoch = 0; epoch < config.update_epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += mb) {
      const std::size_t count = std::min(mb, order.size() - start);
      rows.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                  order.begin() + static_cast<std::ptrdiff_t>(start + count));
      const PpoLoss loss = ppo_loss(learner.policy, batch, rows, config.clip_epsilon,
                                    config.value_coefficient, config.entropy_coefficient);
      if (epoch == 0) {
        diag.policy_loss += loss.policy_loss;
        diag.value_loss += loss.value_loss;
        ++first_epoch_batches;
      }
      nets::adam_update(learner.policy.mean.params(), learner.mean_adam, loss.gradient.mean);
      nets::adam_update(learner.policy.log_std, learner.log_std_adam, loss.gradient.log_std);
      nets::adam_update(learner.policy.value.params(), learner.value_adam, loss.gradient.value);
    }
  }
  if (first_epoch_batches > 0) {
    diag.policy_loss /= first_epoch_batches;
    diag.value_loss /= first_epoch_batches;
  }
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const PpoLoss after = ppo_loss(learner.policy, batch, order, config.clip_epsilon,
                                 config.value_coefficient, config.entropy_coefficient);
  diag.entropy = after.entropy;
  diag.mean_ratio = after.mean_ratio;
  diag.clip_fraction = after.clip_fraction;
  return diag;
}

/// Runs one episode with the current policy and fills a batch with
/// normalized advantages. Divergence ends the episode early.
inline RolloutBatch collect_episode(const PolicyModel& policy, const SceneState& start,
                                    const SceneParams& scene, const LimbParams& limb,
                                    const PpoConfig& config, Rng& rng, bool* diverged = nullptr) {
  const int steps = config.steps_per_episode;
  const int obs_n = policy.observation_size();
  const int act_n = policy.action_size();
  RolloutBatch b;
  b.observations.resize(steps, obs_n);
  b.actions.resize(steps, act_n);
  b.log_probs.resize(steps);
  b.rewards.resize(steps);
  SceneState s = start;
  ActivationSample applied;
  int t = 0;
  bool failed = false;
  for (; t < steps; ++t) {
    const VectorXd o = observe(s, config.observation_scale);
    const VectorXd mu = nets::forward(policy.mean, o);
    const VectorXd a = sample_action(mu, policy.log_std, rng);
    b.observations.row(t) = o.transpose();
    b.actions.row(t) = a.transpose();
    b.log_probs[t] = log_prob(mu, policy.log_std, a);
    applied.a = a;  // clamped to [0, 1] inside scene_step
    const double x0 = s.x;
    try {
      s = scene_step(s, applied, g2p::kTick, scene, limb);
    } catch (const NumericalDivergence&) {
      failed = true;
      break;
    }
    b.rewards[t] = s.x - x0;
  }
  if (failed) {
    // The step that diverged yields no reward or transition.
    b.observations.conservativeResize(t, Eigen::NoChange);
    b.actions.conservativeResize(t, Eigen::NoChange);
    b.log_probs.conservativeResize(t);
    b.rewards.conservativeResize(t);
  }
  if (diverged) *diverged = failed;
  if (b.size() == 0) return b;
  b.values = nets::forward_batch(policy.value, b.observations.transpose()).row(0).transpose();
  AdvantageEstimate est = gae(b.rewards, b.values, config.gamma, config.lambda);
  b.returns = std::move(est.returns);
  b.advantages = std::move(est.advantages);
  const double m = b.advantages.mean();
  const double sd = std::sqrt((b.advantages.array() - m).square().mean());
  b.advantages = (b.advantages.array() - m) / (sd + 1e-8);
  return b;
}

struct EpisodeStats {
  int episode = 0;
  double reward = 0.0;  // m, net chassis displacement
  double value_loss = std::numeric_limits<double>::quiet_NaN();
  double policy_loss = std::numeric_limits<double>::quiet_NaN();
  double mean_ratio = std::numeric_limits<double>::quiet_NaN();
  int steps = 0;
  bool diverged = false;
};

struct PpoResult {
  std::vector<EpisodeStats> episodes;
  PolicyModel policy;

  std::vector<double> rewards() const {
    std::vector<double> r;
    r.reserve(episodes.size());
    for (const auto& e : episodes) r.push_back(e.reward);
    return r;
  }
};

/// End-to-end PPO on the locomotion scene. Each episode starts from the same
/// settled state and is followed by one update on that episode's data.
inline PpoResult train_ppo(const LimbParams& limb, const SceneParams& scene,
                           const PpoConfig& config, std::uint64_t seed) {
  if (config.episodes < 1) throw std::invalid_argument("episodes must be >= 1");
  if (config.steps_per_episode < 1) throw std::invalid_argument("steps_per_episode must be >= 1");
  PpoLearner learner(init_policy(config.shape, derive_seed(seed, 30)), config.learning_rate);
  Rng noise(derive_seed(seed, 31));
  Rng shuffle(derive_seed(seed, 32));
  const SceneState start = g2p::settled_scene_state(scene, limb, config.settle_s);

  PpoResult result;
  result.episodes.reserve(static_cast<std::size_t>(config.episodes));
  for (int ep = 0; ep < config.episodes; ++ep) {
    EpisodeStats stats;
    stats.episode = ep;
    const RolloutBatch batch =
        collect_episode(learner.policy, start, scene, limb, config, noise, &stats.diverged);
    stats.steps = static_cast<int>(batch.size());
    stats.reward = batch.rewards.sum();
    if (batch.size() > 0) {
      const UpdateDiagnostics d = ppo_update(learner, batch, config, shuffle);
      stats.value_loss = d.value_loss;
      stats.policy_loss = d.policy_loss;
      stats.mean_ratio = d.mean_ratio;
    }
    result.episodes.push_back(stats);
  }
  result.policy = std::move(learner.policy);
  return result;
}

}  // namespace tendon::ppo
