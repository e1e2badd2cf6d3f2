#include <gtest/gtest.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "mlpcpg/checkpoint.hpp"
#include "mlpcpg/policy.hpp"
#include "mlpcpg/rng.hpp"

using namespace mlpcpg;

namespace {

RobotState level_state() {
  RobotState s;
  s.q = nominal_posture();
  s.gravity_projection = Vec3(0, 0, -1);
  s.base_position = Vec3(0, 0, 0.46);
  return s;
}

}  // namespace

TEST(Observation, LayoutAndWrapping) {
  ObservationPipeline pipe;
  pipe.normalize = false;
  pipe.update_stats = false;
  RobotState robot = level_state();
  robot.base_velocity = Vec3(1.0, 0.5, -0.25);
  Goal goal{1.5, -0.5, 0.25};
  CpgState cpg;
  cpg.theta.setConstant(kTwoPi + 0.3);
  cpg.r.setConstant(0.4);
  const VecX obs = assemble_observation(robot, goal, cpg, pipe);
  ASSERT_EQ(obs.size(), 60);
  EXPECT_DOUBLE_EQ(obs[0], 1.0);
  EXPECT_DOUBLE_EQ(obs[kGoalOffset], 1.5);
  EXPECT_DOUBLE_EQ(obs[kGoalOffset + 2], 0.25);
  EXPECT_DOUBLE_EQ(obs[kCpgROffset], 0.4);
  EXPECT_NEAR(obs[kCpgThetaOffset], 0.3, 1e-12);  // wrapped from 2*pi + 0.3
}

TEST(Observation, ConstantInputSettlesThroughFilter) {
  ObservationPipeline pipe;
  pipe.normalize = false;
  pipe.update_stats = false;
  RobotState robot = level_state();
  robot.base_velocity = Vec3(0.7, 0, 0);
  Goal goal;
  CpgState cpg;
  for (int k = 0; k < 30; ++k) {
    const VecX obs = assemble_observation(robot, goal, cpg, pipe);
    EXPECT_NEAR(obs[0], 0.7, 1e-6);  // unity DC gain, warm-started
  }
}

TEST(Observation, RejectsBadSensors) {
  ObservationPipeline pipe;
  RobotState robot = level_state();
  robot.qd[3] = std::nan("");
  Goal goal;
  CpgState cpg;
  EXPECT_THROW(assemble_observation(robot, goal, cpg, pipe), DomainError);
  robot = level_state();
  robot.gravity_projection = Vec3(0, 0, -0.5);  // not a unit vector
  EXPECT_THROW(assemble_observation(robot, goal, cpg, pipe), DomainError);
}

TEST(Observation, NormalizerFreezesForEvaluation) {
  ObservationPipeline pipe;
  Rng rng(3);
  RobotState robot = level_state();
  Goal goal;
  CpgState cpg;
  for (int k = 0; k < 100; ++k) {
    robot.base_velocity = Vec3(rng.normal(), rng.normal(), rng.normal());
    assemble_observation(robot, goal, cpg, pipe);
  }
  const double count = pipe.normalizer.count();
  pipe.update_stats = false;
  robot.base_velocity = Vec3(5, 5, 5);
  assemble_observation(robot, goal, cpg, pipe);
  EXPECT_DOUBLE_EQ(pipe.normalizer.count(), count);
}

TEST(RunningNormalizerTest, MatchesBatchStatistics) {
  Rng rng(5);
  RunningNormalizer norm(3);
  std::vector<VecX> xs;
  for (int k = 0; k < 500; ++k) {
    VecX x(3);
    x << 2.0 + rng.normal(), -1.0 + 3.0 * rng.normal(), rng.normal() * 0.1;
    xs.push_back(x);
    norm.update(x);
  }
  VecX mean = VecX::Zero(3);
  for (const auto& x : xs) mean += x;
  mean /= xs.size();
  EXPECT_LT((norm.mean() - mean).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Act, DeterministicMidRangeAtZeroPsi) {
  Policy policy;  // zero MLP: kappa/chi = 0
  policy.cpg = default_cpg_params();
  policy.cpg.eta.setZero();     // kill the rhythm: r floors to ~0
  policy.cpg.offset.setZero();  // psi ~ 0
  policy.freq_mode = FrequencyMode::kAdaptiveFree;
  CpgState cpg;  // r starts at 0 -> floored
  Rng rng(1);
  const ActResult res =
      policy.act(VecX::Zero(kObsDim), cpg, ActMode::kDeterministic, rng);
  EXPECT_NEAR(res.q_hat[0], 0.0, 1e-5);  // psi ~ amplitude floor, not exactly 0
  const Vec12 qmin = RobotModel::joint_min(), qmax = RobotModel::joint_max();
  for (int i = 0; i < 12; ++i)
    EXPECT_NEAR(res.q_hat[i], 0.5 * (qmin[i] + qmax[i]), 1e-5);
}

TEST(Act, SquashBoundaryMapsToJointLimits) {
  const Vec12 qmin = RobotModel::joint_min(), qmax = RobotModel::joint_max();
  for (int i = 0; i < 12; ++i) {
    EXPECT_DOUBLE_EQ(qmin[i] + 0.5 * (1.0 + 1.0) * (qmax[i] - qmin[i]), qmax[i]);
    EXPECT_DOUBLE_EQ(qmin[i] + 0.5 * (-1.0 + 1.0) * (qmax[i] - qmin[i]), qmin[i]);
  }
}

TEST(Act, CommandsAlwaysWithinLimits) {
  Rng rng(11);
  Policy policy;
  policy.init(rng);
  policy.mlp.net.flat() *= 100.0;  // saturate the heads
  const Vec12 qmin = RobotModel::joint_min(), qmax = RobotModel::joint_max();
  CpgState cpg;
  cpg.r.setConstant(1.5);
  VecX obs(kObsDim);
  for (int trial = 0; trial < 50; ++trial) {
    for (int i = 0; i < kObsDim; ++i) obs[i] = 3.0 * rng.normal();
    cpg.theta.setConstant(rng.uniform(0, kTwoPi));
    const ActResult res = policy.act(obs, cpg, ActMode::kStochastic, rng);
    for (int i = 0; i < 12; ++i) {
      EXPECT_GE(res.q_hat[i], qmin[i]);
      EXPECT_LE(res.q_hat[i], qmax[i]);
    }
    EXPECT_TRUE(std::isfinite(res.log_prob));
  }
}

TEST(Act, StochasticConvergesToDeterministicAsSigmaVanishes) {
  Rng rng(21);
  Policy policy;
  policy.init(rng);
  for (int i = 0; i < 12; ++i) policy.mlp.net.b3()[1 + 36 + i] = -20.0;  // sigma ~ 2e-9
  CpgState cpg;
  cpg.r.setConstant(0.5);
  VecX obs = VecX::Zero(kObsDim);
  Rng r1(5), r2(6);
  const ActResult stoch = policy.act(obs, cpg, ActMode::kStochastic, r1);
  const ActResult det = policy.act(obs, cpg, ActMode::kDeterministic, r2);
  EXPECT_LT((stoch.q_hat - det.q_hat).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Act, LogProbMatchesManualComputation) {
  Policy policy;  // zero params: sigma = 1
  policy.cpg = default_cpg_params();
  policy.freq_mode = FrequencyMode::kAdaptiveFree;
  CpgState cpg;
  cpg.r.setConstant(0.3);
  Rng rng(77);
  const VecX obs = VecX::Zero(kObsDim);
  const ActResult res = policy.act(obs, cpg, ActMode::kStochastic, rng);

  Rng rng2(0);
  const ActResult det = policy.act(obs, cpg, ActMode::kDeterministic, rng2);
  double lp = 0.0;
  for (int i = 0; i < 12; ++i) {
    const double z = res.pre_squash[i] - det.pre_squash[i];  // sigma = 1
    lp += -0.5 * z * z - 0.5 * std::log(kTwoPi);
    const double a = std::tanh(res.pre_squash[i]);
    lp -= std::log(1.0 - a * a);
  }
  EXPECT_NEAR(res.log_prob, lp, 1e-9);
}

TEST(Act, FrequencyPinning) {
  Rng rng(31);
  Policy policy;
  policy.init(rng);
  CpgState cpg;
  VecX obs = VecX::Zero(kObsDim);
  policy.freq_mode = FrequencyMode::kFixed15;
  EXPECT_DOUBLE_EQ(policy.act(obs, cpg, ActMode::kDeterministic, rng).fb.f, 1.5);
  policy.freq_mode = FrequencyMode::kFixed30;
  EXPECT_DOUBLE_EQ(policy.act(obs, cpg, ActMode::kDeterministic, rng).fb.f, 3.0);
  policy.freq_mode = FrequencyMode::kAdaptiveCurve;
  const double f_free = policy.act(obs, cpg, ActMode::kDeterministic, rng).fb.f;
  EXPECT_GE(f_free, 0.0);
  EXPECT_LE(f_free, 3.0);
}

TEST(ActionFilter, ConstantWarmStartsAndHolds) {
  FilterState filt;
  const Vec12 q = Vec12::Constant(0.7);
  const Vec12 first = filter_action(filt, q);
  EXPECT_LT((first - q).cwiseAbs().maxCoeff(), 1e-12);
  for (int k = 0; k < 20; ++k) {
    const Vec12 out = filter_action(filt, q);
    EXPECT_LT((out - q).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Checkpoint, PolicyRoundTripIsExact) {
  Rng rng(13);
  Policy policy;
  policy.init(rng);
  policy.cpg.eps(0, 5) = 1.25;
  policy.cpg.phi(3, 2) = -0.75;
  policy.freq_mode = FrequencyMode::kFixed30;
  RunningNormalizer norm(FilterState::kObsChannels);
  for (int k = 0; k < 10; ++k) {
    VecX x(FilterState::kObsChannels);
    for (int i = 0; i < x.size(); ++i) x[i] = rng.normal();
    norm.update(x);
  }

  const std::string path =
      (std::filesystem::temp_directory_path() / "mlpcpg_test.ckpt").string();
  policy_to_checkpoint(policy, norm).save(path);

  Policy loaded;
  RunningNormalizer norm2(FilterState::kObsChannels);
  policy_from_checkpoint<double>(Checkpoint::load(path), loaded, norm2);
  EXPECT_EQ(loaded.freq_mode, FrequencyMode::kFixed30);
  EXPECT_EQ(0, std::memcmp(loaded.mlp.net.flat().data(), policy.mlp.net.flat().data(),
                           sizeof(double) * policy.mlp.net.flat().size()));
  EXPECT_DOUBLE_EQ(loaded.cpg.eps(0, 5), 1.25);
  EXPECT_DOUBLE_EQ(loaded.cpg.phi(3, 2), -0.75);
  EXPECT_DOUBLE_EQ(norm2.count(), norm.count());
  EXPECT_EQ(0, std::memcmp(norm2.mean().data(), norm.mean().data(),
                           sizeof(double) * norm.mean().size()));
  std::filesystem::remove(path);
}

TEST(Checkpoint, DetectsCorruption) {
  Rng rng(14);
  Policy policy;
  policy.init(rng);
  RunningNormalizer norm(FilterState::kObsChannels);
  const std::string path =
      (std::filesystem::temp_directory_path() / "mlpcpg_corrupt.ckpt").string();
  policy_to_checkpoint(policy, norm).save(path);

  std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
  f.seekp(-8, std::ios::end);
  const char b = 0x5a;
  f.write(&b, 1);
  f.close();
  EXPECT_THROW(Checkpoint::load(path), std::runtime_error);
  std::filesystem::remove(path);
}

TEST(Checkpoint, MissingFileAndBadMagic) {
  EXPECT_THROW(Checkpoint::load("/nonexistent/path.ckpt"), std::runtime_error);
  const std::string path =
      (std::filesystem::temp_directory_path() / "mlpcpg_bad.ckpt").string();
  std::ofstream(path) << "not a checkpoint";
  EXPECT_THROW(Checkpoint::load(path), std::runtime_error);
  std::filesystem::remove(path);
}

TEST(PolicyClock, SubstepCountMatchesClocks) {
  const EnvConfig cfg;
  EXPECT_EQ(cfg.substeps_per_policy_step, 40);
  EXPECT_DOUBLE_EQ(cfg.substep_dt * cfg.substeps_per_policy_step, 0.04);
  const CpgParams p = default_cpg_params();
  EXPECT_DOUBLE_EQ(p.dt, cfg.substep_dt * cfg.substeps_per_policy_step);
}
