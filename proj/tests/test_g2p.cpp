#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include <gtest/gtest.h>

#include "tendon/g2p/babble.hpp"
#include "tendon/g2p/inverse_map.hpp"
#include "tendon/g2p/locomotion.hpp"
#include "tendon/g2p/tasks.hpp"

using namespace tendon;
using namespace tendon::g2p;

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// One babble + map per (stiffness, seed), shared by the statistical tests.
struct Trained {
  BabbleLog log;
  InverseMap map;
};

const Trained& trained(double k, std::uint64_t seed) {
  static std::map<std::pair<double, std::uint64_t>, Trained> cache;
  auto it = cache.find({k, seed});
  if (it != cache.end()) return it->second;
  Trained t;
  t.log = motor_babble(default_limb(k), 180.0, derive_seed(seed, 1));
  t.map = build_inverse_map(t.log, derive_seed(seed, 2));
  return cache.emplace(std::make_pair(k, seed), std::move(t)).first->second;
}

constexpr int kSeeds = 10;

}  // namespace

TEST(Babble, ProtocolLengthAndRanges) {
  const BabbleLog& log = trained(0.0, 0).log;
  EXPECT_EQ(log.size(), 18000);
  EXPECT_EQ(log.kinematics.rows(), 18000);
  EXPECT_EQ(log.kinematics.cols(), tasks::kKinematicsWidth);
  EXPECT_TRUE(log.kinematics.allFinite());
  EXPECT_GE(log.activations.minCoeff(), 0.0);
  EXPECT_LE(log.activations.maxCoeff(), 1.0);
  for (int m = 0; m < 3; ++m) {
    EXPECT_LT(log.activations.col(m).minCoeff(), 0.05) << "muscle " << m;
    EXPECT_GT(log.activations.col(m).maxCoeff(), 0.95) << "muscle " << m;
  }
  const auto& limits = default_limb().joint_limits;
  for (int j = 0; j < 2; ++j) {
    EXPECT_GE(log.kinematics.col(j).minCoeff(), limits[j].lo);
    EXPECT_LE(log.kinematics.col(j).maxCoeff(), limits[j].hi);
  }
}

TEST(Babble, DeterministicInSeed) {
  const BabbleLog a = motor_babble(default_limb(2000), 5.0, 9);
  const BabbleLog b = motor_babble(default_limb(2000), 5.0, 9);
  const BabbleLog c = motor_babble(default_limb(2000), 5.0, 10);
  EXPECT_EQ(a.size(), 500);
  EXPECT_EQ(a.activations, b.activations);
  EXPECT_EQ(a.kinematics, b.kinematics);
  EXPECT_NE(a.activations, c.activations);
  EXPECT_EQ(a.stiffness, 2000.0);
}

TEST(Babble, AccelerationsComeFromTheSimulator) {
  // Replaying the logged activations reproduces the logged kinematics,
  // including the acceleration columns.
  const LimbParams p = default_limb(5000);
  const BabbleLog log = motor_babble(p, 2.0, 4);
  LimbState s;
  for (Eigen::Index i = 0; i < log.size(); ++i) {
    ActivationSample a;
    a.a = log.activations.row(i).transpose();
    s = step(s, a, kTick, p);
    RowMatrix row(1, tasks::kKinematicsWidth);
    write_kinematics(s, row.row(0));
    ASSERT_EQ(row.row(0), log.kinematics.row(i)) << "sample " << i;
  }
}

TEST(Babble, DivergenceReportsSample) {
  try {
    motor_babble(default_limb(1e8), 2.0, 1);
    FAIL() << "expected divergence";
  } catch (const NumericalDivergence& e) {
    EXPECT_GE(e.sample(), 0);
    EXPECT_LT(e.sample(), 200);
  }
  EXPECT_THROW(motor_babble(default_limb(), 0.0, 1), std::invalid_argument);
}

TEST(InverseMap, ArchitectureTrainingAndDeterminism) {
  const Trained& t = trained(0.0, 0);
  EXPECT_EQ(t.map.model.layer_sizes(), (std::vector<int>{6, 15, 3}));
  EXPECT_EQ(t.map.model.parameter_count(), 153u);
  ASSERT_EQ(t.map.history.train_mse.size(), 20u);
  int rises = 0;
  for (std::size_t i = 1; i < 20; ++i) rises += t.map.history.train_mse[i] > t.map.history.train_mse[i - 1];
  EXPECT_LE(rises, 3);

  const nets::MlpModel untrained =
      nets::init_mlp(inverse_map_layers(), nets::Activation::logistic, derive_seed(derive_seed(0, 2), 1));
  const nets::Dataset d = babble_dataset(t.log);
  EXPECT_LT(nets::mse(t.map.model, d), nets::mse(untrained, d));

  const InverseMap again = build_inverse_map(t.log, derive_seed(0, 2));
  EXPECT_EQ(again.model, t.map.model);
}

TEST(InverseMap, PredictionsAreActivations) {
  const Trained& t = trained(0.0, 0);
  RowMatrix wild = RowMatrix::Random(200, 6) * 100.0;
  const RowMatrix a = predict_activations(t.map, wild);
  EXPECT_GE(a.minCoeff(), 0.0);
  EXPECT_LE(a.maxCoeff(), 1.0);
}

TEST(InverseMap, StifferSystemStartsWorseEndsBetter) {
  std::vector<double> first0, first1, last0, last1;
  for (int s = 0; s < kSeeds; ++s) {
    const auto& h0 = trained(0.0, s).map.history.train_mse;
    const auto& h1 = trained(1e4, s).map.history.train_mse;
    first0.push_back(h0.front());
    last0.push_back(h0.back());
    first1.push_back(h1.front());
    last1.push_back(h1.back());
  }
  EXPECT_GT(median(first1), median(first0));
  EXPECT_LT(median(last1), median(last0));
}

TEST(RunTask, HoldingRestPostureStaysNearIt) {
  // Pilot runs at 1e4 N/m give 0.001-0.08 rad per joint.
  const LimbParams p = default_limb(1e4);
  const tasks::ReferenceTrajectory rest{RowMatrix::Zero(3000, 6), tasks::ReferenceLabel::cyclical, 100.0};
  std::vector<double> errors;
  for (int s = 0; s < kSeeds; ++s) {
    const AttemptRecord rec = run_task(trained(1e4, s).map, rest, p);
    EXPECT_EQ(rec.realized.rows(), 3000);
    errors.push_back(rec.mean_rmse());
  }
  EXPECT_LT(median(errors), 0.1);
}

TEST(RunTask, OpenLoopReplayIsDeterministic) {
  const LimbParams p = default_limb(1e4);
  const auto ref = default_cyclical(TaskSettings{}, p);
  const AttemptRecord a = run_task(trained(1e4, 1).map, ref, p);
  const AttemptRecord b = run_task(trained(1e4, 1).map, ref, p);
  EXPECT_EQ(a.realized, b.realized);
  EXPECT_EQ(a.energy, tasks::energy(a.activations));
  EXPECT_EQ(a.rmse, tasks::rmse(a.realized, a.desired));
}

TEST(Refine, BabbleOnlyEqualsContinuedTraining) {
  const Trained& t = trained(0.0, 0);
  Experience ex;
  ex.add(t.log);
  const InverseMap refined = refine(t.map, ex, 77);
  nets::MlpModel direct = t.map.model;
  nets::train(direct, babble_dataset(t.log), {}, 77);
  EXPECT_EQ(refined.model, direct);
  EXPECT_THROW(refine(t.map, Experience{}, 1), std::invalid_argument);
}

TEST(Refine, ExperienceOnlyGrows) {
  Experience ex;
  Eigen::Index last = 0;
  for (int i = 0; i < 5; ++i) {
    ex.add(RowMatrix::Zero(10 + i, 6), RowMatrix::Zero(10 + i, 3));
    EXPECT_GT(ex.rows(), last);
    last = ex.rows();
  }
  EXPECT_EQ(ex.dataset().size(), last);
  EXPECT_THROW(ex.add(RowMatrix::Zero(3, 6), RowMatrix::Zero(2, 3)), LengthMismatch);
}

TEST(Refine, OneRoundUsuallyHelpsAtModerateStiffness) {
  const LimbParams p = default_limb(1e4);
  const auto ref = default_cyclical(TaskSettings{}, p);
  int improved = 0;
  for (int s = 0; s < kSeeds; ++s) {
    const Trained& t = trained(1e4, s);
    const AttemptRecord before = run_task(t.map, ref, p);
    Experience ex;
    ex.add(t.log);
    ex.add(before.realized, before.activations);
    const AttemptRecord after = run_task(refine(t.map, ex, derive_seed(s, 3)), ref, p);
    improved += after.mean_rmse() <= before.mean_rmse();
  }
  EXPECT_GE(improved, 7);
}

TEST(Adaptation, SeriesShapeAndArguments) {
  TaskSettings short_babble;
  short_babble.babble_duration_s = 30.0;
  const AdaptationSeries s = adaptation_experiment(default_limb(), 7000, 2000, 2, 5, short_babble);
  EXPECT_FALSE(s.diverged);
  EXPECT_EQ(s.rmse.size(), 3u);
  EXPECT_EQ(s.babble_stiffness, 7000.0);
  EXPECT_EQ(s.test_stiffness, 2000.0);
  const AdaptationSeries again = adaptation_experiment(default_limb(), 7000, 2000, 2, 5, short_babble);
  EXPECT_EQ(again.rmse, s.rmse);
  EXPECT_THROW(adaptation_experiment(default_limb(), 0, 0, -1, 1), std::invalid_argument);
}

TEST(Locomotion, AttemptCoversTenGaitCycles) {
  const LimbParams p = default_limb(2000);
  const SceneParams sp;
  Rng rng(3);
  const auto ref = tasks::exploration_reference(tasks::sample_exploration_ellipse(rng, p.joint_limits, 1.3), 10);
  EXPECT_EQ(ref.size(), 1300);
  int toggles = -1;
  const AttemptRecord rec =
      run_scene_task(trained(0.0, 0).map, ref, sp, p, settled_scene_state(sp, p, 1.0), &toggles);
  EXPECT_EQ(rec.realized.rows(), 1300);
  EXPECT_GE(toggles, 0);
  EXPECT_TRUE(std::isfinite(rec.reward));
}

TEST(Locomotion, ZeroAttemptsFailsImmediately) {
  LocomotionOptions o;
  o.max_attempts = 0;
  const LocomotionResult r = locomotion_g2p(default_limb(2000), SceneParams{}, 1, o);
  EXPECT_FALSE(r.success);
  EXPECT_EQ(r.attempts_used, 0);
  EXPECT_TRUE(std::isnan(r.final_reward));
  EXPECT_TRUE(r.attempts.empty());
  o.reward_threshold_m = 0.0;
  EXPECT_THROW(locomotion_g2p(default_limb(), SceneParams{}, 1, o), std::invalid_argument);
}

TEST(Locomotion, DeterministicAndRecordsEveryAttempt) {
  LocomotionOptions o;
  o.max_attempts = 3;
  o.babble_duration_s = 20.0;
  o.reward_threshold_m = 1e3;
  const LocomotionResult a = locomotion_g2p(default_limb(5000), SceneParams{}, 4, o);
  const LocomotionResult b = locomotion_g2p(default_limb(5000), SceneParams{}, 4, o);
  EXPECT_FALSE(a.success);
  EXPECT_EQ(a.attempts_used, 3);
  ASSERT_EQ(a.attempts.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(a.attempts[i].reward, b.attempts[i].reward);
  EXPECT_EQ(a.final_reward, a.attempts.back().reward);
  EXPECT_EQ(a.final_energy, a.attempts.back().energy);
}

TEST(Locomotion, LowThresholdTriggersOneExploitReplay) {
  LocomotionOptions o;
  o.max_attempts = 5;
  o.babble_duration_s = 20.0;
  o.reward_threshold_m = 1e-9;
  // Any forward attempt passes.
  const LocomotionResult r = locomotion_g2p(default_limb(5000), SceneParams{}, 4, o);
  ASSERT_TRUE(r.success);
  EXPECT_EQ(static_cast<int>(r.attempts.size()), r.attempts_used + 1);
  EXPECT_EQ(r.final_reward, r.attempts.back().reward);
  EXPECT_GE(r.attempts[r.attempts_used - 1].reward, o.reward_threshold_m);
}
