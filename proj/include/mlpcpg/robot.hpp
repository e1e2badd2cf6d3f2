#pragma once

#include <array>
#include <cmath>

#include "mlpcpg/types.hpp"

namespace mlpcpg {

/// Jueying-class quadruped constants. Legs are ordered FL, FR, RL, RR with
/// joints (hip roll, hip pitch, knee pitch) per leg.
struct RobotModel {
  static constexpr double kUpperLeg = 0.33;  // [m]
  static constexpr double kLowerLeg = 0.34;  // [m]
  static constexpr double kBodyLength = 0.85;
  static constexpr double kBodyWidth = 0.30;
  static constexpr double kBodyHeight = 0.30;
  static constexpr double kMass = 42.0;  // [kg]

  static Vec12 joint_min() {
    Vec12 q;
    for (int leg = 0; leg < kNumLegs; ++leg)
      q.segment<3>(3 * leg) << -0.523, -2.792, 0.698;
    return q;
  }
  static Vec12 joint_max() {
    Vec12 q;
    for (int leg = 0; leg < kNumLegs; ++leg)
      q.segment<3>(3 * leg) << 0.523, 0.349, 2.792;
    return q;
  }
  static Vec12 torque_limit() {
    Vec12 t;
    for (int leg = 0; leg < kNumLegs; ++leg) t.segment<3>(3 * leg) << 75.0, 75.0, 130.0;
    return t;
  }
  static constexpr double kVelocityLimit = 19.0;  // [rad/s]

  /// Hip mounting points in the base frame (x forward, y left, z up).
  static Vec3 hip_offset(int leg) {
    const double hx = 0.425, hy = 0.15;
    switch (leg) {
      case 0: return {hx, hy, 0.0};    // FL
      case 1: return {hx, -hy, 0.0};   // FR
      case 2: return {-hx, hy, 0.0};   // RL
      default: return {-hx, -hy, 0.0}; // RR
    }
  }
};

/// Foot position relative to the hip, in the base frame. Hip roll rotates
/// about the x axis; hip pitch and knee pitch act in the leg's sagittal
/// plane, angles measured from straight down.
inline Vec3 leg_forward_kinematics(const Vec3& q) {
  const double roll = q[0], hip = q[1], knee = q[2];
  const double x = -RobotModel::kUpperLeg * std::sin(hip) -
                   RobotModel::kLowerLeg * std::sin(hip + knee);
  const double z = -RobotModel::kUpperLeg * std::cos(hip) -
                   RobotModel::kLowerLeg * std::cos(hip + knee);
  return {x, -std::sin(roll) * z, std::cos(roll) * z};
}

/// 3x3 Jacobian of leg_forward_kinematics w.r.t. the leg's joint angles.
inline Mat3 leg_jacobian(const Vec3& q) {
  const double roll = q[0], hip = q[1], knee = q[2];
  const double l1 = RobotModel::kUpperLeg, l2 = RobotModel::kLowerLeg;
  const double dx_dhip = -l1 * std::cos(hip) - l2 * std::cos(hip + knee);
  const double dx_dknee = -l2 * std::cos(hip + knee);
  const double z = -l1 * std::cos(hip) - l2 * std::cos(hip + knee);
  const double dz_dhip = l1 * std::sin(hip) + l2 * std::sin(hip + knee);
  const double dz_dknee = l2 * std::sin(hip + knee);
  Mat3 jac;
  jac << 0.0, dx_dhip, dx_dknee,
      -std::cos(roll) * z, -std::sin(roll) * dz_dhip, -std::sin(roll) * dz_dknee,
      -std::sin(roll) * z, std::cos(roll) * dz_dhip, std::cos(roll) * dz_dknee;
  return jac;
}

/// Joint angles of the nominal standing posture: the CPG setpoints pushed
/// through the same tanh + joint-limit rescaling the policy uses.
inline Vec12 nominal_posture() {
  const Vec12 qmin = RobotModel::joint_min();
  const Vec12 qmax = RobotModel::joint_max();
  Vec12 q;
  const double offsets[3] = {0.0, 0.28, -0.1};
  for (int leg = 0; leg < kNumLegs; ++leg) {
    for (int j = 0; j < 3; ++j) {
      const double a = std::tanh(offsets[j]);
      const int k = 3 * leg + j;
      q[k] = qmin[k] + 0.5 * (a + 1.0) * (qmax[k] - qmin[k]);
    }
  }
  return q;
}

/// Joint-space PD controller configuration.
struct PdConfig {
  double kp = 300.0;  // [Nm/rad]
  double kd = 10.0;   // [Nm s/rad]
  Vec12 torque_limit = RobotModel::torque_limit();
  double velocity_limit = RobotModel::kVelocityLimit;
};

/// tau = Kp (q_hat - q) + Kd (0 - q_dot), clipped to per-joint peak torque.
inline Vec12 pd_torque(const PdConfig& cfg, const Vec12& q_hat, const Vec12& q,
                       const Vec12& q_dot) {
  require_finite(q_hat, "q_hat");
  require_finite(q, "q");
  require_finite(q_dot, "q_dot");
  Vec12 tau = cfg.kp * (q_hat - q) - cfg.kd * q_dot;
  return tau.cwiseMax(-cfg.torque_limit).cwiseMin(cfg.torque_limit);
}

}  // namespace mlpcpg
