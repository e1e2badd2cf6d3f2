#pragma once

#include <cmath>
#include <optional>

#include "mlpcpg/cpg.hpp"
#include "mlpcpg/env.hpp"
#include "mlpcpg/filters.hpp"
#include "mlpcpg/mlp.hpp"
#include "mlpcpg/robot.hpp"
#include "mlpcpg/types.hpp"

namespace mlpcpg {

/// Welford running mean/variance, used to normalize the robot-sensor block
/// of the observation. Stats freeze when update is disabled (evaluation).
class RunningNormalizer {
 public:
  explicit RunningNormalizer(int dim = 0) { resize(dim); }

  void resize(int dim) {
    mean_.setZero(dim);
    m2_.setZero(dim);
    count_ = 0.0;
  }

  void update(const VecX& x) {
    count_ += 1.0;
    const VecX delta = x - mean_;
    mean_ += delta / count_;
    m2_ += delta.cwiseProduct(x - mean_);
  }

  VecX normalize(const VecX& x) const {
    if (count_ < 2.0) return x;
    const VecX sd = (m2_ / (count_ - 1.0)).cwiseMax(1e-8).cwiseSqrt();
    return ((x - mean_).cwiseQuotient(sd)).cwiseMax(-10.0).cwiseMin(10.0);
  }

  double count() const { return count_; }
  const VecX& mean() const { return mean_; }
  const VecX& m2() const { return m2_; }
  void load(const VecX& mean, const VecX& m2, double count) {
    mean_ = mean;
    m2_ = m2;
    count_ = count;
  }

 private:
  VecX mean_, m2_;
  double count_ = 0.0;
};

/// Observation layout (60):
///   [0..2]   base linear velocity, heading frame
///   [3..5]   base angular velocity
///   [6..8]   gravity projection
///   [9..20]  joint angles
///   [21..32] joint velocities        (S_O, filtered at 10 Hz, normalized)
///   [33..35] goal vx, vy, wyaw       (S_G, raw)
///   [36..47] CPG amplitudes r        (S_I, raw)
///   [48..59] CPG phases, wrapped to [0, 2*pi)
inline constexpr int kGoalOffset = 33;
inline constexpr int kCpgROffset = 36;
inline constexpr int kCpgThetaOffset = 48;

/// Per-episode observation machinery: the S_O low-pass filter plus the
/// shared running normalizer (normalizes the filtered S_O block only, so the
/// stored observation keeps raw goal and CPG states).
struct ObservationPipeline {
  FilterState filters;
  RunningNormalizer normalizer{FilterState::kObsChannels};
  bool update_stats = true;
  bool normalize = true;

  void reset_episode() { filters.reset(); }
};

inline VecX assemble_observation(const RobotState& robot, const Goal& goal,
                                 const CpgState& cpg, ObservationPipeline& pipe) {
  VecX so(FilterState::kObsChannels);
  so.segment<3>(0) = robot.base_velocity;
  so.segment<3>(3) = robot.angular_velocity;
  so.segment<3>(6) = robot.gravity_projection;
  so.segment<12>(9) = robot.q;
  so.segment<12>(21) = robot.qd;
  require_finite(so, "sensor observation");
  const double norm = robot.gravity_projection.norm();
  if (std::abs(norm - 1.0) > 1e-6)
    throw DomainError("gravity projection must be a unit vector");

  VecX filtered = pipe.filters.obs.step(so);
  if (pipe.update_stats) pipe.normalizer.update(filtered);
  if (pipe.normalize) filtered = pipe.normalizer.normalize(filtered);

  VecX obs(kObsDim);
  obs.head<FilterState::kObsChannels>() = filtered;
  obs[kGoalOffset + 0] = goal.vx;
  obs[kGoalOffset + 1] = goal.vy;
  obs[kGoalOffset + 2] = goal.wyaw;
  obs.segment<kNumJoints>(kCpgROffset) = cpg.r;
  obs.segment<kNumJoints>(kCpgThetaOffset) = wrap_phase(cpg.theta);
  return obs;
}

/// 5 Hz low-pass on the executed target joint angles.
inline Vec12 filter_action(FilterState& filt, const Vec12& q_hat) {
  return filt.action.step(q_hat);
}

enum class FrequencyMode { kFixed15, kFixed30, kAdaptiveCurve, kAdaptiveFree };

inline std::optional<double> pinned_frequency(FrequencyMode m) {
  switch (m) {
    case FrequencyMode::kFixed15: return 1.5;
    case FrequencyMode::kFixed30: return 3.0;
    default: return std::nullopt;
  }
}

inline const char* frequency_mode_name(FrequencyMode m) {
  switch (m) {
    case FrequencyMode::kFixed15: return "fixed-1.5";
    case FrequencyMode::kFixed30: return "fixed-3.0";
    case FrequencyMode::kAdaptiveCurve: return "adaptive-curve";
    default: return "adaptive-free";
  }
}

inline FrequencyMode frequency_mode_from_name(const std::string& name) {
  if (name == "fixed-1.5") return FrequencyMode::kFixed15;
  if (name == "fixed-3.0") return FrequencyMode::kFixed30;
  if (name == "adaptive-curve") return FrequencyMode::kAdaptiveCurve;
  if (name == "adaptive-free") return FrequencyMode::kAdaptiveFree;
  throw DomainError("unknown frequency mode: " + name);
}

enum class ActMode { kStochastic, kDeterministic };

template <typename S>
struct ActResultT {
  Vec12 q_hat = Vec12::Zero();          // target joint angles within limits
  Vec12T<S> pre_squash = Vec12T<S>::Zero();  // sampled u = psi + sigma * noise
  S log_prob = S(0);
  CpgState new_cpg;
  FeedbackSignalsT<S> fb;               // after frequency pinning
  Vec12T<S> sigma = Vec12T<S>::Ones();
};

using ActResult = ActResultT<double>;

// log(1 - tanh(u)^2) = 2 (log 2 - u - softplus(-2u)), evaluated stably.
template <typename S>
S log_one_minus_tanh_sq(S u) {
  const S two_u = S(2) * u;
  const S softplus = two_u > S(0) ? std::log1p(std::exp(-two_u))
                                  : std::log1p(std::exp(two_u)) - two_u;
  return S(2) * (std::log(S(2)) - u - softplus);
}

/// The composite policy: feedback MLP + oscillator network + squashing to
/// joint limits. Pure given the explicit CPG state; the caller owns episode
/// state (filters, CPG, normalizer).
template <typename S>
struct PolicyT {
  MlpParamsT<S> mlp;
  CpgParamsT<S> cpg;
  FrequencyMode freq_mode = FrequencyMode::kAdaptiveCurve;

  void init(Rng& rng) {
    mlp.init(rng);
    CpgParams defaults = default_cpg_params();
    cpg.eta = defaults.eta.template cast<S>();
    cpg.offset = defaults.offset.template cast<S>();
    cpg.gamma = S(defaults.gamma);
    cpg.dt = S(defaults.dt);
    cpg.eps.setZero();
    cpg.phi.setZero();
  }

  ActResultT<S> act(const VecX& obs, const CpgState& cpg_state, ActMode mode,
                    Rng& rng) const {
    const VecXT<S> obs_s = obs.template cast<S>();
    FeedbackHeadT<S> head = mlp_forward<S>(mlp, obs_s);
    if (auto f = pinned_frequency(freq_mode)) head.fb.f = S(*f);

    CpgStateT<S> state_s;
    state_s.theta = cpg_state.theta.template cast<S>();
    state_s.r = cpg_state.r.template cast<S>();
    const CpgOutputT<S> cpg_out = cpg_step<S>(state_s, cpg, head.fb);

    ActResultT<S> res;
    res.fb = head.fb;
    res.sigma = head.sigma;
    res.new_cpg.theta = cpg_out.new_state.theta.template cast<double>();
    res.new_cpg.r = cpg_out.new_state.r.template cast<double>();

    const Vec12 qmin = RobotModel::joint_min();
    const Vec12 qmax = RobotModel::joint_max();
    res.log_prob = S(0);
    for (int i = 0; i < kNumJoints; ++i) {
      S u = cpg_out.psi[i];
      if (mode == ActMode::kStochastic) {
        const S noise = S(rng.normal());
        u += head.sigma[i] * noise;
        res.log_prob += S(-0.5) * noise * noise - std::log(head.sigma[i]) -
                        S(0.5) * std::log(S(kTwoPi)) - log_one_minus_tanh_sq(u);
      }
      res.pre_squash[i] = u;
      const double a = std::tanh(static_cast<double>(u));
      res.q_hat[i] = qmin[i] + 0.5 * (a + 1.0) * (qmax[i] - qmin[i]);
    }
    return res;
  }
};

using Policy = PolicyT<double>;

}  // namespace mlpcpg
