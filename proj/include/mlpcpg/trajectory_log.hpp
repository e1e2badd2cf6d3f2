#pragma once

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mlpcpg/cpg.hpp"
#include "mlpcpg/env.hpp"
#include "mlpcpg/types.hpp"

namespace mlpcpg {

inline constexpr const char* kTrajectorySchema = "mlpcpg-trajectory v1";

/// One policy-clock sample of a rollout.
struct TrajectoryRow {
  double time = 0.0;
  Vec3 base_position = Vec3::Zero();
  Vec3 rpy = Vec3::Zero();
  Vec3 base_velocity = Vec3::Zero();
  Vec3 angular_velocity = Vec3::Zero();
  Vec12 q = Vec12::Zero();
  Vec12 qd = Vec12::Zero();
  Vec12 tau = Vec12::Zero();
  std::array<Vec3, kNumLegs> foot_world{};
  std::array<bool, kNumLegs> contact{};
  double reward_total = 0.0;
  std::array<double, 15> reward_terms{};
  Vec12 cpg_r = Vec12::Zero();
  Vec12 cpg_theta = Vec12::Zero();
  double f = 0.0;
  Vec12 kappa = Vec12::Zero();
  Vec12 xi = Vec12::Zero();
  Vec12 chi = Vec12::Zero();
  Goal goal;
};

class TrajectoryLog {
 public:
  std::vector<TrajectoryRow> rows;

  static std::string header() {
    std::ostringstream h;
    h << "time,base_x,base_y,base_z,roll,pitch,yaw,vx,vy,vz,wroll,wpitch,wyaw";
    auto vec12 = [&h](const std::string& p) {
      for (int i = 0; i < kNumJoints; ++i) h << "," << p << i;
    };
    vec12("q");
    vec12("qd");
    vec12("tau");
    for (int n = 0; n < kNumLegs; ++n)
      h << ",foot" << n << "_x,foot" << n << "_y,foot" << n << "_z";
    for (int n = 0; n < kNumLegs; ++n) h << ",contact" << n;
    h << ",reward";
    for (const char* name : RewardBreakdown::kNames) h << ",rw_" << name;
    vec12("r");
    vec12("theta");
    h << ",f";
    vec12("kappa");
    vec12("xi");
    vec12("chi");
    h << ",goal_vx,goal_vy,goal_wyaw";
    return h.str();
  }

  void write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write trajectory log: " + path);
    out << "# " << kTrajectorySchema << "\n" << header() << "\n";
    char buf[32];
    auto num = [&](double v) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << buf;
    };
    for (const auto& r : rows) {
      num(r.time);
      auto put = [&](double v) { out << ","; num(v); };
      for (int i = 0; i < 3; ++i) put(r.base_position[i]);
      for (int i = 0; i < 3; ++i) put(r.rpy[i]);
      for (int i = 0; i < 3; ++i) put(r.base_velocity[i]);
      for (int i = 0; i < 3; ++i) put(r.angular_velocity[i]);
      for (int i = 0; i < kNumJoints; ++i) put(r.q[i]);
      for (int i = 0; i < kNumJoints; ++i) put(r.qd[i]);
      for (int i = 0; i < kNumJoints; ++i) put(r.tau[i]);
      for (int n = 0; n < kNumLegs; ++n)
        for (int i = 0; i < 3; ++i) put(r.foot_world[n][i]);
      for (int n = 0; n < kNumLegs; ++n) put(r.contact[n] ? 1.0 : 0.0);
      put(r.reward_total);
      for (double t : r.reward_terms) put(t);
      for (int i = 0; i < kNumJoints; ++i) put(r.cpg_r[i]);
      for (int i = 0; i < kNumJoints; ++i) put(r.cpg_theta[i]);
      put(r.f);
      for (int i = 0; i < kNumJoints; ++i) put(r.kappa[i]);
      for (int i = 0; i < kNumJoints; ++i) put(r.xi[i]);
      for (int i = 0; i < kNumJoints; ++i) put(r.chi[i]);
      put(r.goal.vx);
      put(r.goal.vy);
      put(r.goal.wyaw);
      out << "\n";
    }
  }

  static TrajectoryLog read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read trajectory log: " + path);
    std::string line;
    if (!std::getline(in, line) || line.find(kTrajectorySchema) == std::string::npos)
      throw std::runtime_error("unrecognized trajectory schema in " + path);
    std::getline(in, line);  // column header
    if (line != header())
      throw std::runtime_error("trajectory column mismatch in " + path);

    TrajectoryLog log;
    std::vector<double> vals;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      vals.clear();
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
      std::size_t k = 0;
      TrajectoryRow r;
      auto take = [&] { return vals.at(k++); };
      r.time = take();
      for (int i = 0; i < 3; ++i) r.base_position[i] = take();
      for (int i = 0; i < 3; ++i) r.rpy[i] = take();
      for (int i = 0; i < 3; ++i) r.base_velocity[i] = take();
      for (int i = 0; i < 3; ++i) r.angular_velocity[i] = take();
      for (int i = 0; i < kNumJoints; ++i) r.q[i] = take();
      for (int i = 0; i < kNumJoints; ++i) r.qd[i] = take();
      for (int i = 0; i < kNumJoints; ++i) r.tau[i] = take();
      for (int n = 0; n < kNumLegs; ++n)
        for (int i = 0; i < 3; ++i) r.foot_world[n][i] = take();
      for (int n = 0; n < kNumLegs; ++n) r.contact[n] = take() > 0.5;
      r.reward_total = take();
      for (double& t : r.reward_terms) t = take();
      for (int i = 0; i < kNumJoints; ++i) r.cpg_r[i] = take();
      for (int i = 0; i < kNumJoints; ++i) r.cpg_theta[i] = take();
      r.f = take();
      for (int i = 0; i < kNumJoints; ++i) r.kappa[i] = take();
      for (int i = 0; i < kNumJoints; ++i) r.xi[i] = take();
      for (int i = 0; i < kNumJoints; ++i) r.chi[i] = take();
      r.goal.vx = take();
      r.goal.vy = take();
      r.goal.wyaw = take();
      log.rows.push_back(r);
    }
    return log;
  }
};

}  // namespace mlpcpg
