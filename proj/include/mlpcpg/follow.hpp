#pragma once

#include <cmath>
#include <fstream>
#include <string>

#include "mlpcpg/policy.hpp"
#include "mlpcpg/types.hpp"

namespace mlpcpg {

enum class PathKind { kSquare, kCosine, kEight, kClover };

inline PathKind path_kind_from_name(const std::string& name) {
  if (name == "square") return PathKind::kSquare;
  if (name == "cosine") return PathKind::kCosine;
  if (name == "eight") return PathKind::kEight;
  if (name == "clover") return PathKind::kClover;
  throw DomainError("unknown trajectory path: " + name);
}

/// Named reference path for target following. scale is the characteristic
/// size in meters, period the traversal time in seconds.
struct TrajectorySpec {
  PathKind kind = PathKind::kSquare;
  double scale = 4.0;    // [m]
  double period = 40.0;  // [s]
  double duration = 40.0;

  void validate() const {
    if (!(scale > 0.0) || !(period > 0.0) || !(duration < 1e6))
      throw DomainError("invalid trajectory spec");
  }

  /// Path point at parameter u in [0, 1).
  Eigen::Vector2d point(double u) const {
    const double tau = kTwoPi * u;
    switch (kind) {
      case PathKind::kSquare: {
        const double s = 4.0 * u;  // perimeter parameter over 4 sides
        const int side = std::min(3, static_cast<int>(s));
        const double w = s - side;
        switch (side) {
          case 0: return {scale * w, 0.0};
          case 1: return {scale, scale * w};
          case 2: return {scale * (1.0 - w), scale};
          default: return {0.0, scale * (1.0 - w)};
        }
      }
      case PathKind::kCosine:
        return {scale * u * 4.0, scale * std::cos(tau)};
      case PathKind::kEight:  // lemniscate of Gerono
        return {scale * std::sin(tau), scale * std::sin(tau) * std::cos(tau)};
      default: {  // four-leaved rose
        const double r = scale * std::sin(2.0 * tau);
        return {r * std::cos(tau), r * std::sin(tau)};
      }
    }
  }
};

inline constexpr const char* kFollowSchema = "mlpcpg-follow v1";

struct FollowResult {
  double mean_speed_error = 0.0;  // mean |v_x - v_hat_x|
  int steps = 0;
};

/// Track a target moving along the reference path: each policy step the
/// target position is mapped into the base frame and translated into a
/// velocity command. Logs commanded vs achieved velocity and the base path.
template <typename S>
FollowResult follow(const PolicyT<S>& policy, const RunningNormalizer& norm,
                    const EnvConfig& env_cfg, const TrajectorySpec& spec, Rng& rng,
                    const std::string& csv_path) {
  spec.validate();
  std::ofstream out(csv_path);
  if (!out) throw std::runtime_error("cannot write follow log: " + csv_path);
  out << "# " << kFollowSchema << "\n"
      << "time,target_x,target_y,base_x,base_y,yaw,cmd_vx,cmd_vy,cmd_wyaw,"
         "vx,vy,wyaw\n";

  FollowResult result;
  if (spec.duration <= 0.0) return result;

  ObservationPipeline pipe;
  pipe.normalizer = norm;
  pipe.update_stats = false;
  ResetResult ep = reset(env_cfg, rng);
  const PdConfig pd;
  const double policy_dt = env_cfg.substep_dt * env_cfg.substeps_per_policy_step;

  double t = 0.0;
  char buf[384];
  while (t < spec.duration - 0.5 * policy_dt) {
    const Eigen::Vector2d target = spec.point(std::fmod(t / spec.period, 1.0));
    // target position in the base frame (yaw-aligned)
    const double yaw = ep.robot.rpy[2];
    const Eigen::Rotation2Dd to_base(-yaw);
    const Eigen::Vector2d rel =
        to_base * (target - Eigen::Vector2d(ep.robot.base_position.head<2>()));
    ep.goal = target_to_command(rel);

    VecX obs = assemble_observation(ep.robot, ep.goal, ep.cpg, pipe);
    const ActResultT<S> act = policy.act(obs, ep.cpg, ActMode::kDeterministic, rng);
    const Vec12 q_cmd = filter_action(pipe.filters, act.q_hat);
    for (int sub = 0; sub < env_cfg.substeps_per_policy_step; ++sub) {
      const Vec12 tau = pd_torque(pd, q_cmd, ep.robot.q, ep.robot.qd);
      ep.robot = env_step(ep.robot, tau, env_cfg);
    }
    t += policy_dt;
    ep.cpg = act.new_cpg;
    result.mean_speed_error += std::abs(ep.robot.base_velocity[0] - ep.goal.vx);
    result.steps += 1;

    std::snprintf(buf, sizeof(buf),
                  "%.6g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,"
                  "%.10g,%.10g\n",
                  t, target[0], target[1], ep.robot.base_position[0],
                  ep.robot.base_position[1], yaw, ep.goal.vx, ep.goal.vy, ep.goal.wyaw,
                  ep.robot.base_velocity[0], ep.robot.base_velocity[1],
                  ep.robot.angular_velocity[2]);
    out << buf;
    if (check_termination(ep.robot, 0.0, env_cfg) == StepOutcome::kFail) break;
  }
  if (result.steps > 0) result.mean_speed_error /= result.steps;
  return result;
}

}  // namespace mlpcpg
