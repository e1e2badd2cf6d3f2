#pragma once

#include <optional>

#include "mlpcpg/policy.hpp"
#include "mlpcpg/trajectory_log.hpp"

namespace mlpcpg {

struct RolloutOptions {
  double duration = 10.0;  // [s]
  ActMode mode = ActMode::kDeterministic;
  std::optional<Goal> fixed_goal;  // overrides the sampled goal
  bool stop_on_termination = true;
};

struct RolloutResult {
  TrajectoryLog log;
  double episode_return = 0.0;
  StepOutcome outcome = StepOutcome::kTimeout;
};

/// One evaluation episode under a frozen policy; the normalizer is used with
/// frozen statistics. Produces the per-policy-step trajectory log.
template <typename S>
RolloutResult rollout_episode(const PolicyT<S>& policy, const RunningNormalizer& norm,
                              const EnvConfig& env_cfg, Rng& rng,
                              const RolloutOptions& opt = {}) {
  ObservationPipeline pipe;
  pipe.normalizer = norm;
  pipe.update_stats = false;

  ResetResult ep = reset(env_cfg, rng);
  if (opt.fixed_goal) ep.goal = *opt.fixed_goal;
  VecX obs = assemble_observation(ep.robot, ep.goal, ep.cpg, pipe);

  RolloutResult result;
  const PdConfig pd;
  const double policy_dt = env_cfg.substep_dt * env_cfg.substeps_per_policy_step;
  double t = 0.0;
  while (t < opt.duration - 0.5 * policy_dt) {
    const ActResultT<S> act = policy.act(obs, ep.cpg, opt.mode, rng);
    const Vec12 q_cmd = filter_action(pipe.filters, act.q_hat);
    for (int sub = 0; sub < env_cfg.substeps_per_policy_step; ++sub) {
      const Vec12 tau = pd_torque(pd, q_cmd, ep.robot.q, ep.robot.qd);
      ep.robot = env_step(ep.robot, tau, env_cfg);
    }
    t += policy_dt;
    ep.cpg = act.new_cpg;
    const RewardBreakdown rb = compute_reward(ep.robot, ep.goal, env_cfg);
    result.episode_return += rb.total();

    TrajectoryRow row;
    row.time = t;
    row.base_position = ep.robot.base_position;
    row.rpy = ep.robot.rpy;
    row.base_velocity = ep.robot.base_velocity;
    row.angular_velocity = ep.robot.angular_velocity;
    row.q = ep.robot.q;
    row.qd = ep.robot.qd;
    row.tau = ep.robot.tau;
    row.foot_world = ep.robot.foot_world;
    row.contact = ep.robot.contact;
    row.reward_total = rb.total();
    for (int i = 0; i < RewardBreakdown::kNumTerms; ++i) row.reward_terms[i] = rb.terms[i];
    row.cpg_r = ep.cpg.r;
    row.cpg_theta = wrap_phase(ep.cpg.theta);
    row.f = static_cast<double>(act.fb.f);
    row.kappa = act.fb.kappa.template cast<double>();
    row.xi = act.fb.xi.template cast<double>();
    row.chi = act.fb.chi.template cast<double>();
    row.goal = ep.goal;
    result.log.rows.push_back(row);

    const StepOutcome outcome = check_termination(ep.robot, t, env_cfg);
    if (outcome != StepOutcome::kContinue) {
      result.outcome = outcome;
      if (opt.stop_on_termination) return result;
    }
    obs = assemble_observation(ep.robot, ep.goal, ep.cpg, pipe);
  }
  return result;
}

}  // namespace mlpcpg
