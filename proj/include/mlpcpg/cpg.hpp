#pragma once

#include <cmath>
#include <vector>

#include "mlpcpg/types.hpp"

namespace mlpcpg {

/// Feedback bounds. The frequency bound [0, 3] Hz follows the controller
/// design; the remaining bounds keep the feedback terms from dominating the
/// oscillators' intrinsic amplitude and offset.
inline constexpr double kFreqMin = 0.0;
inline constexpr double kFreqMax = 3.0;
inline constexpr double kKappaBound = 1.0;
inline constexpr double kXiBound = kTwoPi;
inline constexpr double kChiBound = 0.5;

/// Lower bound for the oscillator amplitude. r = 0 is a fixed point of the
/// amplitude dynamics; the floor keeps a collapsed oscillator re-excitable
/// via the amplitude feedback.
inline constexpr double kAmplitudeFloor = 1e-6;

/// Constants of the coupled oscillator network: coupling weights and phase
/// biases between the 12 per-joint oscillators, desired amplitudes eta,
/// output setpoints, amplitude convergence rate gamma and integration step.
template <typename S>
struct CpgParamsT {
  Mat12T<S> eps = Mat12T<S>::Zero();    // coupling weights, diagonal fixed at 0
  Mat12T<S> phi = Mat12T<S>::Zero();    // phase biases [rad]
  Vec12T<S> eta = Vec12T<S>::Zero();    // desired amplitudes
  Vec12T<S> offset = Vec12T<S>::Zero(); // oscillation setpoints o
  S gamma = S(12);                      // amplitude rise rate [1/s]
  S dt = S(0.04);                       // integration step [s]

  void validate() const {
    require_finite(eps, "eps");
    require_finite(phi, "phi");
    require_finite(eta, "eta");
    require_finite(offset, "offset");
    require_finite(static_cast<double>(gamma), "gamma");
    require_finite(static_cast<double>(dt), "dt");
    if (!(gamma > S(0))) throw DomainError("gamma must be > 0");
    if (!(dt > S(0))) throw DomainError("dt must be > 0");
    for (int i = 0; i < kNumJoints; ++i) {
      if (eps(i, i) != S(0)) throw DomainError("eps diagonal must be 0");
    }
  }
};

/// Oscillator hidden state. theta is kept unwrapped; wrapping happens only
/// when the state is exported into observations, so the coupling terms never
/// see a wrap discontinuity.
template <typename S>
struct CpgStateT {
  Vec12T<S> theta = Vec12T<S>::Zero();  // phases [rad], unwrapped
  Vec12T<S> r = Vec12T<S>::Zero();      // amplitudes

  void validate() const {
    require_finite(theta, "theta");
    require_finite(r, "r");
  }
};

/// Per-step modulation produced by the feedback network.
template <typename S>
struct FeedbackSignalsT {
  S f = S(0);                           // common frequency [Hz]
  Vec12T<S> kappa = Vec12T<S>::Zero();  // amplitude feedback
  Vec12T<S> xi = Vec12T<S>::Zero();     // phase-rate feedback [rad/s]
  Vec12T<S> chi = Vec12T<S>::Zero();    // setpoint feedback

  void validate() const {
    require_finite(static_cast<double>(f), "f");
    require_finite(kappa, "kappa");
    require_finite(xi, "xi");
    require_finite(chi, "chi");
  }
};

template <typename S>
struct CpgOutputT {
  Vec12T<S> psi = Vec12T<S>::Zero();  // raw oscillator outputs (pre-squash)
  CpgStateT<S> new_state;
};

using CpgParams = CpgParamsT<double>;
using CpgState = CpgStateT<double>;
using FeedbackSignals = FeedbackSignalsT<double>;
using CpgOutput = CpgOutputT<double>;

/// CPG parameter values used by the 12-oscillator quadruped network:
/// dt = 0.04, gamma = 12, per-leg offsets [0, 0.28, -0.1] and desired
/// amplitudes [0, 0.8, 0.8] (hip roll, hip pitch, knee); couplings start
/// at zero and are learned.
inline CpgParams default_cpg_params() {
  CpgParams p;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    p.offset[3 * leg + 0] = 0.0;
    p.offset[3 * leg + 1] = 0.28;
    p.offset[3 * leg + 2] = -0.1;
    p.eta[3 * leg + 0] = 0.0;
    p.eta[3 * leg + 1] = 0.8;
    p.eta[3 * leg + 2] = 0.8;
  }
  return p;
}

/// One explicit-Euler step of the coupled oscillator network.
///
///   theta_dot_i = 2*pi*f + sum_j eps_ij * sin(theta_j - theta_i - phi_ij) + xi_i
///   r_dot_i     = gamma * r_i * ((eta_i + kappa_i)^2 - r_i^2)
///   psi_i       = r'_i * cos(theta'_i) + chi_i + o_i
///
/// Pure function: the caller owns the state, the step owns nothing.
template <typename S>
CpgOutputT<S> cpg_step(const CpgStateT<S>& state, const CpgParamsT<S>& params,
                       const FeedbackSignalsT<S>& fb) {
  state.validate();
  params.validate();
  fb.validate();

  CpgOutputT<S> out;
  const S two_pi_f = S(kTwoPi) * fb.f;
  for (int i = 0; i < kNumJoints; ++i) {
    S coupling = S(0);
    for (int j = 0; j < kNumJoints; ++j) {
      if (j == i) continue;
      coupling += params.eps(i, j) *
                  std::sin(state.theta[j] - state.theta[i] - params.phi(i, j));
    }
    const S theta_dot = two_pi_f + coupling + fb.xi[i];
    const S amp = params.eta[i] + fb.kappa[i];
    const S r_dot = params.gamma * state.r[i] * (amp * amp - state.r[i] * state.r[i]);

    out.new_state.theta[i] = state.theta[i] + theta_dot * params.dt;
    out.new_state.r[i] = std::max(state.r[i] + r_dot * params.dt, S(kAmplitudeFloor));
    out.psi[i] = out.new_state.r[i] * std::cos(out.new_state.theta[i]) + fb.chi[i] +
                 params.offset[i];
  }
  return out;
}

/// Open-loop rollout: folds cpg_step over a feedback sequence.
template <typename S>
std::vector<CpgOutputT<S>> rollout_cpg(const CpgStateT<S>& state0,
                                       const CpgParamsT<S>& params,
                                       const std::vector<FeedbackSignalsT<S>>& fb_sequence) {
  if (fb_sequence.empty()) throw DomainError("fb_sequence must be non-empty");
  std::vector<CpgOutputT<S>> outputs;
  outputs.reserve(fb_sequence.size());
  CpgStateT<S> state = state0;
  for (std::size_t k = 0; k < fb_sequence.size(); ++k) {
    try {
      outputs.push_back(cpg_step(state, params, fb_sequence[k]));
    } catch (const DomainError& e) {
      throw DomainError("step " + std::to_string(k) + ": " + e.what());
    }
    state = outputs.back().new_state;
  }
  return outputs;
}

/// Wraps a phase into [0, 2*pi).
inline double wrap_phase(double theta) {
  require_finite(theta, "theta");
  double w = std::fmod(theta, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;  // fmod can land exactly on 2*pi after the add
  return w;
}

inline Vec12 wrap_phase(const Vec12& theta) {
  Vec12 out;
  for (int i = 0; i < kNumJoints; ++i) out[i] = wrap_phase(theta[i]);
  return out;
}

}  // namespace mlpcpg
