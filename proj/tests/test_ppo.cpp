#include <cmath>
#include <limits>
#include <numbers>

#include <gtest/gtest.h>

#include "suites.hpp"
#include "tendon/g2p/locomotion.hpp"
#include "tendon/ppo/gae.hpp"
#include "tendon/ppo/policy.hpp"
#include "tendon/ppo/ppo.hpp"

using namespace tendon;
using namespace tendon::ppo;

namespace {

PpoConfig small_config() {
  PpoConfig c;
  c.episodes = 3;
  c.steps_per_episode = 200;
  c.update_epochs = 2;
  return c;
}

RolloutBatch random_batch(const PolicyModel& p, int n, std::uint64_t seed) {
  Rng rng(seed);
  RolloutBatch b;
  b.observations.resize(n, p.observation_size());
  b.actions.resize(n, p.action_size());
  b.log_probs.resize(n);
  b.advantages.resize(n);
  b.returns.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < p.observation_size(); ++c) b.observations(i, c) = rng.uniform(-1, 1);
    const VectorXd mu = nets::forward(p.mean, b.observations.row(i).transpose());
    const VectorXd a = sample_action(mu, p.log_std, rng);
    b.actions.row(i) = a.transpose();
    b.log_probs[i] = log_prob(mu, p.log_std, a) + rng.uniform(-0.3, 0.3);
    b.advantages[i] = rng.normal();
    b.returns[i] = rng.normal();
  }
  return b;
}

std::vector<Eigen::Index> all_rows(Eigen::Index n) {
  std::vector<Eigen::Index> r(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) r[static_cast<std::size_t>(i)] = i;
  return r;
}

}  // namespace

TEST(Gae, LambdaZeroGivesTdErrors) {
  Eigen::VectorXd r(4), v(4);
  r << 1.0, -0.5, 0.25, 2.0;
  v << 0.3, 0.1, -0.2, 0.7;
  const AdvantageEstimate e = gae(r, v, 0.9, 0.0, 0.4);
  EXPECT_DOUBLE_EQ(e.advantages[0], 1.0 + 0.9 * 0.1 - 0.3);
  EXPECT_DOUBLE_EQ(e.advantages[2], 0.25 + 0.9 * 0.7 + 0.2);
  EXPECT_DOUBLE_EQ(e.advantages[3], 2.0 + 0.9 * 0.4 - 0.7);
  EXPECT_EQ(e.returns, e.advantages + v);
}

TEST(Gae, GammaZeroGivesRewardMinusValue) {
  Eigen::VectorXd r(3), v(3);
  r << 1.0, 2.0, 3.0;
  v << 0.5, 0.5, 4.0;
  const AdvantageEstimate e = gae(r, v, 0.0, 0.95, 10.0);
  EXPECT_EQ(e.advantages, r - v);
}

TEST(Gae, MatchesBruteForce) {
  const auto s = suites::gae_suite(200, 301);
  EXPECT_EQ(s.failures, 0) << s.worst;
}

TEST(Gae, RejectsBadArguments) {
  EXPECT_THROW(gae(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(2), 0.9, 0.9), LengthMismatch);
  EXPECT_THROW(gae(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(3), 1.1, 0.9), std::invalid_argument);
}

TEST(Policy, ShapeAndInitialMean) {
  const PolicyModel p = init_policy(PolicyShape{}, 3);
  EXPECT_EQ(p.mean.layer_sizes(), (std::vector<int>{8, 64, 64, 3}));
  EXPECT_EQ(p.value.layer_sizes(), (std::vector<int>{8, 64, 64, 1}));
  EXPECT_EQ(p.log_std, VectorXd::Constant(3, std::log(0.3)));
  const VectorXd mu = nets::forward(p.mean, VectorXd::Zero(8));
  EXPECT_LT((mu.array() - 0.5).abs().maxCoeff(), 0.05);
}

TEST(Policy, LogProbAndEntropyClosedForm) {
  VectorXd mu(2), ls(2), a(2);
  mu << 0.1, -0.2;
  ls << std::log(0.5), 0.0;
  a << 0.6, 0.3;
  const double expected = -0.5 * 1.0 - std::log(0.5) - 0.5 * 0.25 - std::log(2 * std::numbers::pi);
  EXPECT_NEAR(log_prob(mu, ls, a), expected, 1e-14);
  EXPECT_NEAR(entropy(ls), std::log(0.5) + std::log(2 * std::numbers::pi * std::numbers::e), 1e-14);
}

TEST(Policy, CheckpointRoundTrip) {
  PolicyModel p = init_policy(PolicyShape{}, 11);
  p.log_std << -1.0 / 3.0, 0.1, -2.0;
  const PolicyModel back = policy_from_json(nlohmann::json::parse(to_json(p).dump()));
  EXPECT_EQ(back.mean, p.mean);
  EXPECT_EQ(back.value, p.value);
  EXPECT_EQ(back.log_std, p.log_std);
  nlohmann::json bad = to_json(p);
  bad["log_std"] = {0.0};
  EXPECT_THROW(policy_from_json(bad), ConfigError);
  EXPECT_THROW(policy_from_json(nlohmann::json{{"format", "tendon-mlp"}}), ConfigError);
}

TEST(Observe, PassThroughAndBoundedAngles) {
  const SceneParams sp;
  const LimbParams limb = default_limb(2000);
  SceneState s = g2p::settled_scene_state(sp, limb, 1.0);
  EXPECT_EQ(observe(s)[7], s.foot_contact ? 1.0 : 0.0);
  EXPECT_EQ(observe(s), observe(s));
  Rng rng(13);
  ActivationSample a;
  double worst = 0.0;
  int contacts = 0;
  for (int t = 0; t < 10000; ++t) {
    for (int m = 0; m < 3; ++m) a.a[m] = rng.uniform();
    s = scene_step(s, a, g2p::kTick, sp, limb);
    const VectorXd o = observe(s);
    ASSERT_EQ(o[7], s.foot_contact ? 1.0 : 0.0);
    contacts += s.foot_contact;
    worst = std::max({worst, std::abs(o[0]), std::abs(o[1])});
  }
  EXPECT_LE(worst, 2.0);
  EXPECT_GT(contacts, 0);
}

TEST(Surrogate, GradientMatchesFiniteDifferences) {
  const auto s = suites::ppo_surrogate_suite(20, 302);
  EXPECT_EQ(s.failures, 0) << s.worst;
}

TEST(Surrogate, ZeroAdvantagesLeavePolicyUnchanged) {
  PpoLearner learner(init_policy(PolicyShape{}, 5), 3e-4);
  RolloutBatch b = random_batch(learner.policy, 128, 6);
  b.advantages.setZero();
  const PpoLoss loss = ppo_loss(learner.policy, b, all_rows(128), 0.2, 0.5, 0.0);
  EXPECT_EQ(loss.policy_loss, 0.0);
  EXPECT_EQ(loss.gradient.mean.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(loss.gradient.log_std.cwiseAbs().maxCoeff(), 0.0);

  const PolicyModel before = learner.policy;
  PpoConfig c;
  Rng rng(7);
  ppo_update(learner, b, c, rng);
  EXPECT_EQ(learner.policy.mean, before.mean);
  EXPECT_EQ(learner.policy.log_std, before.log_std);
  EXPECT_NE(learner.policy.value.params(), before.value.params());

  // An entropy bonus alone moves only the log std.
  c.entropy_coefficient = 0.01;
  ppo_update(learner, b, c, rng);
  EXPECT_EQ(learner.policy.mean, before.mean);
  EXPECT_GT(learner.policy.log_std.minCoeff(), before.log_std.maxCoeff());
}

TEST(Surrogate, InfiniteClipIsUnclipped) {
  const PolicyModel p = init_policy(PolicyShape{}, 8);
  const RolloutBatch b = random_batch(p, 64, 9);
  const auto rows = all_rows(64);
  const PpoLoss loss = ppo_loss(p, b, rows, std::numeric_limits<double>::infinity(), 0.5, 0.0);
  double unclipped = 0.0;
  for (Eigen::Index i = 0; i < 64; ++i) {
    const VectorXd mu = nets::forward(p.mean, b.observations.row(i).transpose());
    unclipped -= std::exp(log_prob(mu, p.log_std, b.actions.row(i).transpose()) - b.log_probs[i]) *
                 b.advantages[i] / 64.0;
  }
  EXPECT_NEAR(loss.policy_loss, unclipped, 1e-12);
  EXPECT_EQ(loss.clip_fraction, 0.0);
  const PpoLoss clipped = ppo_loss(p, b, rows, 0.2, 0.5, 0.0);
  EXPECT_GT(clipped.clip_fraction, 0.0);
  EXPECT_THROW(ppo_loss(p, b, {}, 0.2, 0.5, 0.0), std::invalid_argument);
}

TEST(Train, SeriesLengthStepsAndDeterminism) {
  const PpoConfig c = small_config();
  const PpoResult a = train_ppo(default_limb(2000), SceneParams{}, c, 4);
  const PpoResult b = train_ppo(default_limb(2000), SceneParams{}, c, 4);
  ASSERT_EQ(a.episodes.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a.episodes[i].steps, 200);
    EXPECT_FALSE(a.episodes[i].diverged);
    EXPECT_EQ(a.episodes[i].reward, b.episodes[i].reward);
    EXPECT_TRUE(std::isfinite(a.episodes[i].value_loss));
  }
  EXPECT_EQ(a.policy.mean, b.policy.mean);
  PpoConfig bad = c;
  bad.episodes = 0;
  EXPECT_THROW(train_ppo(default_limb(), SceneParams{}, bad, 1), std::invalid_argument);
}

TEST(Train, FrozenPolicyDependsOnlyOnSeed) {
  PpoConfig c = small_config();
  c.learning_rate = 0.0;
  const PpoResult a = train_ppo(default_limb(5000), SceneParams{}, c, 21);
  c.update_epochs = 5;
  c.minibatch_size = 17;
  const PpoResult b = train_ppo(default_limb(5000), SceneParams{}, c, 21);
  EXPECT_EQ(a.rewards(), b.rewards());
  EXPECT_EQ(a.policy.mean, init_policy(c.shape, derive_seed(21, 30)).mean);
}

TEST(Train, DivergenceEndsEpisodeWithPartialReward) {
  const SceneParams sp;
  const SceneState start = g2p::settled_scene_state(sp, default_limb(0), 1.0);
  const PolicyModel p = init_policy(PolicyShape{}, 2);
  PpoConfig c;
  c.steps_per_episode = 300;
  Rng rng(3);
  bool diverged = false;
  const RolloutBatch b = collect_episode(p, start, sp, default_limb(1e8), c, rng, &diverged);
  EXPECT_TRUE(diverged);
  EXPECT_LT(b.size(), 300);
  EXPECT_EQ(b.rewards.size(), b.size());
  if (b.size() > 0) {
    EXPECT_TRUE(b.advantages.allFinite());
    EXPECT_NEAR(b.advantages.mean(), 0.0, 1e-9);
  }
}
