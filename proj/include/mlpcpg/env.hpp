#pragma once

#include <array>
#include <cmath>

#include "mlpcpg/cpg.hpp"
#include "mlpcpg/rng.hpp"
#include "mlpcpg/robot.hpp"
#include "mlpcpg/types.hpp"

namespace mlpcpg {

/// User goal: target forward/lateral velocity and yaw turning rate.
struct Goal {
  double vx = 0.0;    // [m/s]
  double vy = 0.0;    // [m/s]
  double wyaw = 0.0;  // [rad/s]
};

struct EnvConfig {
  double desired_base_height = 0.50;    // [m]
  double desired_foot_clearance = 0.075;  // swing apex target [m]
  double time_limit = 10.0;             // [s]
  double tilt_limit = 30.0 * kPi / 180.0;
  double joint_inertia = 0.05;          // [kg m^2], reduced-order desk value
  double joint_damping = 0.5;           // [Nm s]
  double attitude_time_constant = 0.2;  // roll/pitch return-to-level [s]
  double self_collision_distance = 0.06;  // [m]
  double gravity = 9.81;
  double substep_dt = 0.001;            // [s]
  int substeps_per_policy_step = 40;    // 1000 Hz inner, 25 Hz policy clock
};

/// Reduced-order snapshot of the robot. Orientation is kept as roll/pitch/yaw
/// (the attitude model is first-order) with the quaternion derived from it.
struct RobotState {
  Vec3 base_position = Vec3::Zero();      // world [m]
  Vec3 rpy = Vec3::Zero();                // roll, pitch, yaw [rad]
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
  Vec3 base_velocity = Vec3::Zero();      // heading frame [m/s]
  Vec3 angular_velocity = Vec3::Zero();   // roll, pitch, yaw rates [rad/s]
  Vec3 gravity_projection = -Vec3::UnitZ();  // gravity direction in base frame
  Vec12 q = Vec12::Zero();
  Vec12 qd = Vec12::Zero();
  Vec12 tau = Vec12::Zero();
  std::array<Vec3, kNumLegs> foot_world{};
  std::array<Vec3, kNumLegs> foot_velocity_world{};
  std::array<Vec3, kNumLegs> hip_world{};
  std::array<bool, kNumLegs> contact{};
  bool body_contact = false;
  bool self_collision = false;

  Mat3 rotation() const {
    return (Eigen::AngleAxisd(rpy[2], Vec3::UnitZ()) *
            Eigen::AngleAxisd(rpy[1], Vec3::UnitY()) *
            Eigen::AngleAxisd(rpy[0], Vec3::UnitX()))
        .toRotationMatrix();
  }
};

/// Radial basis kernel exp(c * (x_hat - x)^2); equals 1 iff x == x_hat.
inline double rbf_kernel(double x, double x_hat, double c) {
  const double d = x_hat - x;
  return std::exp(c * d * d);
}

/// Vector form, squared Euclidean distance.
template <typename DerivedA, typename DerivedB>
double rbf_kernel(const Eigen::MatrixBase<DerivedA>& x,
                  const Eigen::MatrixBase<DerivedB>& x_hat, double c) {
  return std::exp(c * (x_hat - x).squaredNorm());
}

/// The 15 task reward terms. Each entry is the raw kernel/indicator value in
/// (0, 1]; total() applies the weights (denominator 31).
struct RewardBreakdown {
  static constexpr int kNumTerms = 15;
  static constexpr std::array<double, kNumTerms> kWeights = {
      8, 4, 1, 1, 1, 4, 2, 2, 1, 1, 1, 1, 2, 1, 1};
  static constexpr std::array<const char*, kNumTerms> kNames = {
      "forward_velocity", "lateral_velocity", "vertical_velocity",
      "roll_velocity", "pitch_velocity", "yaw_velocity",
      "base_orientation", "base_height", "joint_torque", "joint_velocity",
      "ground_contact", "self_collision", "swing_stance", "body_placement",
      "foot_placement"};

  std::array<double, kNumTerms> terms{};

  double total() const {
    double sum = 0.0;
    for (int i = 0; i < kNumTerms; ++i) sum += kWeights[i] * terms[i];
    return sum / 31.0;
  }
};

/// Task reward of the velocity-tracking objective (all kernel widths from
/// the reward table; weights sum to 31).
inline RewardBreakdown compute_reward(const RobotState& s, const Goal& goal,
                                      const EnvConfig& cfg) {
  RewardBreakdown r;
  r.terms[0] = rbf_kernel(s.base_velocity[0], goal.vx, -4.6);
  r.terms[1] = rbf_kernel(s.base_velocity[1], goal.vy, -4.6);
  r.terms[2] = rbf_kernel(s.base_velocity[2], 0.0, -4.6);
  r.terms[3] = rbf_kernel(s.angular_velocity[0], 0.0, -1.87);
  r.terms[4] = rbf_kernel(s.angular_velocity[1], 0.0, -1.87);
  r.terms[5] = rbf_kernel(s.angular_velocity[2], goal.wyaw, -1.87);
  r.terms[6] = rbf_kernel(s.gravity_projection, Vec3(0, 0, -1), -2.35);
  r.terms[7] = rbf_kernel(s.base_position[2], cfg.desired_base_height, -51.17);
  r.terms[8] = rbf_kernel(s.tau, Vec12::Zero(), -0.001);
  r.terms[9] = rbf_kernel(s.qd, Vec12::Zero(), -0.026);
  r.terms[10] = s.body_contact ? 0.0 : 1.0;
  r.terms[11] = s.self_collision ? 0.0 : 1.0;

  // Swing & stance: penalize stance-foot motion, ignore feet at the desired
  // clearance. (h - h_hat) scales the foot's world velocity vector.
  double swing = 0.0;
  for (int n = 0; n < kNumLegs; ++n) {
    const double h_err = s.foot_world[n][2] - cfg.desired_foot_clearance;
    const Vec3 scaled = h_err * s.foot_velocity_world[n];
    swing += rbf_kernel(scaled, Vec3::Zero(), -460.0);
  }
  r.terms[12] = swing / 4.0;

  Eigen::Vector2d mean_foot = Eigen::Vector2d::Zero();
  double foot_place = 0.0;
  for (int n = 0; n < kNumLegs; ++n) {
    mean_foot += s.foot_world[n].head<2>();
    foot_place += rbf_kernel(Eigen::Vector2d(s.foot_world[n].head<2>()),
                             Eigen::Vector2d(s.hip_world[n].head<2>()), -51.17);
  }
  mean_foot /= 4.0;
  r.terms[13] = rbf_kernel(mean_foot, Eigen::Vector2d(s.base_position.head<2>()),
                           -51.17);
  r.terms[14] = foot_place / 4.0;
  return r;
}

namespace detail {

inline void update_kinematics(RobotState& s) {
  const Mat3 rot = s.rotation();
  s.orientation = Eigen::Quaterniond(rot);
  s.gravity_projection = rot.transpose() * Vec3(0, 0, -1);
  for (int n = 0; n < kNumLegs; ++n) {
    s.hip_world[n] = s.base_position + rot * RobotModel::hip_offset(n);
  }
}

inline void update_collision_flags(RobotState& s, const EnvConfig& cfg) {
  s.body_contact = s.base_position[2] - 0.5 * RobotModel::kBodyHeight <= 0.0;
  const auto foot_base = [&](int n) {
    return RobotModel::hip_offset(n) +
           leg_forward_kinematics(s.q.segment<3>(3 * n));
  };
  const double d_front = (foot_base(0).head<2>() - foot_base(1).head<2>()).norm();
  const double d_rear = (foot_base(2).head<2>() - foot_base(3).head<2>()).norm();
  s.self_collision = d_front < cfg.self_collision_distance ||
                     d_rear < cfg.self_collision_distance;
}

}  // namespace detail

/// One 1 ms substep of the stance-constraint dynamics model. Joints follow
/// tau with inertia + damping; the base follows the stance feet: with feet
/// pinned to the ground, planar base velocity and yaw rate are the rigid
/// motion that best cancels the stance-foot velocities, and the base height
/// tracks the stance leg geometry. Airborne phases are ballistic. Roll and
/// pitch relax to level with a first-order time constant.
inline RobotState env_step(const RobotState& state, const Vec12& torques,
                           const EnvConfig& cfg) {
  require_finite(torques, "torques");
  const double dt = cfg.substep_dt;
  const Vec12 qmin = RobotModel::joint_min();
  const Vec12 qmax = RobotModel::joint_max();

  RobotState s = state;
  s.tau = torques.cwiseMax(-RobotModel::torque_limit())
              .cwiseMin(RobotModel::torque_limit());

  // Joint dynamics: I q_ddot = tau - b q_dot.
  for (int i = 0; i < kNumJoints; ++i) {
    const double qdd = (s.tau[i] - cfg.joint_damping * s.qd[i]) / cfg.joint_inertia;
    s.qd[i] = std::clamp(s.qd[i] + qdd * dt, -RobotModel::kVelocityLimit,
                         RobotModel::kVelocityLimit);
    s.q[i] += s.qd[i] * dt;
    if (s.q[i] <= qmin[i]) {
      s.q[i] = qmin[i];
      if (s.qd[i] < 0.0) s.qd[i] = 0.0;
    } else if (s.q[i] >= qmax[i]) {
      s.q[i] = qmax[i];
      if (s.qd[i] > 0.0) s.qd[i] = 0.0;
    }
  }

  // Attitude: first-order return to level.
  const double decay = 1.0 - dt / cfg.attitude_time_constant;
  const double roll_new = s.rpy[0] * decay;
  const double pitch_new = s.rpy[1] * decay;
  s.angular_velocity[0] = (roll_new - s.rpy[0]) / dt;
  s.angular_velocity[1] = (pitch_new - s.rpy[1]) / dt;
  s.rpy[0] = roll_new;
  s.rpy[1] = pitch_new;

  // Leg kinematics in the base frame.
  std::array<Vec3, kNumLegs> foot_base, foot_vel_base;
  for (int n = 0; n < kNumLegs; ++n) {
    const Vec3 leg_q = s.q.segment<3>(3 * n);
    foot_base[n] = RobotModel::hip_offset(n) + leg_forward_kinematics(leg_q);
    foot_vel_base[n] = leg_jacobian(leg_q) * s.qd.segment<3>(3 * n);
  }

  // Base motion from the previous substep's stance set: with stance feet
  // pinned, v_base + w x p + v_foot = 0; solve the planar (vx, vy, w) in
  // least squares over the stance feet, and the vertical from the stance
  // leg geometry.
  int stance_count = 0;
  const Mat3 rot_prev = state.rotation();
  double stance_height = 0.0;
  Mat3 normal = Mat3::Zero();
  Vec3 rhs = Vec3::Zero();
  for (int n = 0; n < kNumLegs; ++n) {
    if (!state.contact[n]) continue;
    ++stance_count;
    const double x = foot_base[n][0], y = foot_base[n][1];
    const double u = foot_vel_base[n][0], w = foot_vel_base[n][1];
    normal(0, 0) += 1.0;
    normal(0, 2) += -y;
    normal(1, 1) += 1.0;
    normal(1, 2) += x;
    normal(2, 0) += -y;
    normal(2, 1) += x;
    normal(2, 2) += x * x + y * y;
    rhs[0] -= u;
    rhs[1] -= w;
    rhs[2] -= x * w - y * u;
    stance_height -= (rot_prev * foot_base[n])[2];
  }

  const double prev_z = s.base_position[2];
  if (stance_count > 0) {
    normal(2, 2) += 1e-9;  // keeps the solve well-posed for one stance foot
    const Vec3 planar = normal.ldlt().solve(rhs);
    const Vec3 v_heading(planar[0], planar[1], 0.0);
    s.angular_velocity[2] = planar[2];
    s.rpy[2] += s.angular_velocity[2] * dt;
    const Mat3 yaw_rot =
        Eigen::AngleAxisd(s.rpy[2], Vec3::UnitZ()).toRotationMatrix();
    const Vec3 v_world = yaw_rot * Vec3(v_heading[0], v_heading[1], 0.0);
    s.base_position[0] += v_world[0] * dt;
    s.base_position[1] += v_world[1] * dt;
    s.base_position[2] = stance_height / stance_count;
    s.base_velocity[0] = v_heading[0];
    s.base_velocity[1] = v_heading[1];
    s.base_velocity[2] = (s.base_position[2] - prev_z) / dt;
  } else {
    s.base_velocity[2] -= cfg.gravity * dt;
    const Mat3 yaw_rot =
        Eigen::AngleAxisd(s.rpy[2], Vec3::UnitZ()).toRotationMatrix();
    const Vec3 v_world =
        yaw_rot * Vec3(s.base_velocity[0], s.base_velocity[1], 0.0);
    s.base_position[0] += v_world[0] * dt;
    s.base_position[1] += v_world[1] * dt;
    s.base_position[2] += s.base_velocity[2] * dt;
    s.rpy[2] += s.angular_velocity[2] * dt;
  }

  detail::update_kinematics(s);
  const Mat3 rot = s.rotation();
  const Mat3 yaw_rot = Eigen::AngleAxisd(s.rpy[2], Vec3::UnitZ()).toRotationMatrix();
  const Vec3 base_vel_world =
      yaw_rot * Vec3(s.base_velocity[0], s.base_velocity[1], s.base_velocity[2]);
  for (int n = 0; n < kNumLegs; ++n) {
    s.foot_world[n] = s.base_position + rot * foot_base[n];
    s.foot_velocity_world[n] = base_vel_world + rot * foot_vel_base[n];
    s.contact[n] = s.foot_world[n][2] <= 0.0;
  }
  detail::update_collision_flags(s, cfg);
  return s;
}

enum class StepOutcome { kContinue, kFail, kTimeout };

/// Fail on body-ground contact or tilt beyond the limit; timeout at the
/// episode limit.
inline StepOutcome check_termination(const RobotState& s, double t,
                                     const EnvConfig& cfg) {
  if (t >= cfg.time_limit) return StepOutcome::kTimeout;
  if (s.body_contact) return StepOutcome::kFail;
  // tilt angle between body z axis and world z via the gravity projection
  const double cos_tilt = -s.gravity_projection[2];
  if (cos_tilt < std::cos(cfg.tilt_limit)) return StepOutcome::kFail;
  return StepOutcome::kContinue;
}

struct ResetResult {
  RobotState robot;
  CpgState cpg;
  Goal goal;
};

/// Episode initialization: velocities, joint angles, CPG amplitudes/phases
/// and the goal are sampled per the exploration protocol. The base starts
/// level at the height given by the stance-leg geometry, all feet treated
/// as in contact.
inline ResetResult reset(const EnvConfig& cfg, Rng& rng) {
  ResetResult out;
  RobotState& s = out.robot;

  s.base_velocity[0] = rng.uniform(-1.0, 5.0);
  s.base_velocity[1] = rng.uniform(-1.0, 1.0);
  s.base_velocity[2] = 0.0;
  s.angular_velocity = Vec3(0.0, 0.0, rng.uniform(-kPi, kPi));

  const Vec12 qmin = RobotModel::joint_min();
  const Vec12 qmax = RobotModel::joint_max();
  const Vec12 q_nominal = nominal_posture();
  for (int i = 0; i < kNumJoints; ++i) {
    s.q[i] = std::clamp(rng.normal(q_nominal[i], kPi / 4.0), qmin[i], qmax[i]);
  }
  s.qd.setZero();
  s.tau.setZero();

  for (int i = 0; i < kNumJoints; ++i) out.cpg.r[i] = rng.uniform(0.0, kPi / 4.0);
  for (int i = 0; i < kNumJoints; ++i) out.cpg.theta[i] = rng.uniform(0.0, kTwoPi);

  out.goal.vx = rng.uniform(-1.0, 5.0);
  out.goal.vy = rng.uniform(-1.0, 1.0);
  out.goal.wyaw = rng.uniform(-kPi / 2.0, kPi / 2.0);

  // Base height from the stance geometry of the sampled posture.
  double height = 0.0;
  std::array<Vec3, kNumLegs> foot_base;
  for (int n = 0; n < kNumLegs; ++n) {
    foot_base[n] =
        RobotModel::hip_offset(n) + leg_forward_kinematics(s.q.segment<3>(3 * n));
    height -= foot_base[n][2];
  }
  s.base_position = Vec3(0.0, 0.0, height / kNumLegs);
  s.rpy.setZero();
  detail::update_kinematics(s);
  const Mat3 rot = s.rotation();
  for (int n = 0; n < kNumLegs; ++n) {
    s.foot_world[n] = s.base_position + rot * foot_base[n];
    s.foot_velocity_world[n].setZero();
    s.contact[n] = true;
  }
  detail::update_collision_flags(s, cfg);
  return out;
}

/// Moving-target position (base frame) to velocity command: forward target
/// gives forward command, the yaw command turns toward the target. Commands
/// are clipped to [-1,4] x [-0.75,0.75] x [-1,1].
inline Goal target_to_command(const Eigen::Vector2d& target_in_base) {
  Goal g;
  const double dist = target_in_base.norm();
  if (dist < 1e-9) return g;
  g.vx = std::clamp(target_in_base[0], -1.0, 4.0);
  g.vy = std::clamp(target_in_base[1], -0.75, 0.75);
  g.wyaw = std::clamp(std::atan2(target_in_base[1], target_in_base[0]), -1.0, 1.0);
  return g;
}

}  // namespace mlpcpg
