#pragma once

#include <cmath>

#include "mlpcpg/cpg.hpp"
#include "mlpcpg/types.hpp"

namespace mlpcpg {

/// Gradients of one cpg_step with respect to its inputs and the learnable
/// parameters (eps, phi). The incoming state is treated as a constant input:
/// this is the single-step semantics of the stateless reformulation, no
/// gradient is chained across steps.
template <typename S>
struct CpgStepGradsT {
  Vec12T<S> d_theta = Vec12T<S>::Zero();
  Vec12T<S> d_r = Vec12T<S>::Zero();
  S d_f = S(0);
  Vec12T<S> d_kappa = Vec12T<S>::Zero();
  Vec12T<S> d_xi = Vec12T<S>::Zero();
  Vec12T<S> d_chi = Vec12T<S>::Zero();
  Mat12T<S> d_eps = Mat12T<S>::Zero();
  Mat12T<S> d_phi = Mat12T<S>::Zero();
};

template <typename S>
struct CpgUpstreamT {
  Vec12T<S> d_new_theta = Vec12T<S>::Zero();
  Vec12T<S> d_new_r = Vec12T<S>::Zero();
  Vec12T<S> d_psi = Vec12T<S>::Zero();
};

using CpgStepGrads = CpgStepGradsT<double>;
using CpgUpstream = CpgUpstreamT<double>;

/// Vector-Jacobian product of cpg_step.
template <typename S>
CpgStepGradsT<S> cpg_step_backward(const CpgStateT<S>& state, const CpgParamsT<S>& params,
                                   const FeedbackSignalsT<S>& fb,
                                   const CpgUpstreamT<S>& upstream) {
  state.validate();
  params.validate();
  fb.validate();
  require_finite(upstream.d_new_theta, "upstream.d_new_theta");
  require_finite(upstream.d_new_r, "upstream.d_new_r");
  require_finite(upstream.d_psi, "upstream.d_psi");

  const S dt = params.dt;
  CpgStepGradsT<S> g;

  // Recompute the forward pass quantities the chain rule needs.
  Vec12T<S> new_theta, new_r;
  Vec12T<S> amp_gate;  // 0 where the amplitude floor clamps
  for (int i = 0; i < kNumJoints; ++i) {
    S coupling = S(0);
    for (int j = 0; j < kNumJoints; ++j) {
      if (j == i) continue;
      coupling += params.eps(i, j) *
                  std::sin(state.theta[j] - state.theta[i] - params.phi(i, j));
    }
    new_theta[i] = state.theta[i] + (S(kTwoPi) * fb.f + coupling + fb.xi[i]) * dt;
    const S amp = params.eta[i] + fb.kappa[i];
    const S pre = state.r[i] +
                  params.gamma * state.r[i] * (amp * amp - state.r[i] * state.r[i]) * dt;
    amp_gate[i] = pre > S(kAmplitudeFloor) ? S(1) : S(0);
    new_r[i] = std::max(pre, S(kAmplitudeFloor));
  }

  // Fold psi's dependence on (theta', r') into the upstream signals.
  Vec12T<S> up_theta, up_r;
  for (int i = 0; i < kNumJoints; ++i) {
    up_theta[i] = upstream.d_new_theta[i] -
                  upstream.d_psi[i] * new_r[i] * std::sin(new_theta[i]);
    up_r[i] = upstream.d_new_r[i] + upstream.d_psi[i] * std::cos(new_theta[i]);
    g.d_chi[i] = upstream.d_psi[i];
  }

  for (int i = 0; i < kNumJoints; ++i) {
    g.d_f += up_theta[i] * S(kTwoPi) * dt;
    g.d_xi[i] = up_theta[i] * dt;

    const S amp = params.eta[i] + fb.kappa[i];
    g.d_kappa[i] = up_r[i] * amp_gate[i] * params.gamma * state.r[i] * S(2) * amp * dt;
    g.d_r[i] = up_r[i] * amp_gate[i] *
               (S(1) + params.gamma * (amp * amp - S(3) * state.r[i] * state.r[i]) * dt);

    g.d_theta[i] += up_theta[i];
    for (int j = 0; j < kNumJoints; ++j) {
      if (j == i) continue;
      const S delta = state.theta[j] - state.theta[i] - params.phi(i, j);
      const S cd = std::cos(delta);
      g.d_theta[j] += up_theta[i] * params.eps(i, j) * cd * dt;
      g.d_theta[i] -= up_theta[i] * params.eps(i, j) * cd * dt;
      g.d_eps(i, j) = up_theta[i] * std::sin(delta) * dt;
      g.d_phi(i, j) = -up_theta[i] * params.eps(i, j) * cd * dt;
    }
  }
  return g;
}

/// Dense Jacobian blocks of cpg_step, assembled row by row from the VJP.
/// Output ordering: (theta'(12), r'(12), psi(12)); state (theta, r);
/// fb (f, kappa, xi, chi); params (eps row-major, phi row-major).
struct StepJacobians {
  MatX d_out_d_state;   // 36 x 24
  MatX d_out_d_fb;      // 36 x 37
  MatX d_out_d_params;  // 36 x 288
};

inline StepJacobians cpg_step_jacobians(const CpgState& state, const CpgParams& params,
                                        const FeedbackSignals& fb) {
  StepJacobians jac;
  jac.d_out_d_state.setZero(36, 24);
  jac.d_out_d_fb.setZero(36, 37);
  jac.d_out_d_params.setZero(36, 288);

  for (int row = 0; row < 36; ++row) {
    CpgUpstream up;
    if (row < 12) {
      up.d_new_theta[row] = 1.0;
    } else if (row < 24) {
      up.d_new_r[row - 12] = 1.0;
    } else {
      up.d_psi[row - 24] = 1.0;
    }
    const CpgStepGrads g = cpg_step_backward(state, params, fb, up);
    jac.d_out_d_state.block<1, 12>(row, 0) = g.d_theta.transpose();
    jac.d_out_d_state.block<1, 12>(row, 12) = g.d_r.transpose();
    jac.d_out_d_fb(row, 0) = g.d_f;
    jac.d_out_d_fb.block<1, 12>(row, 1) = g.d_kappa.transpose();
    jac.d_out_d_fb.block<1, 12>(row, 13) = g.d_xi.transpose();
    jac.d_out_d_fb.block<1, 12>(row, 25) = g.d_chi.transpose();
    for (int i = 0; i < kNumJoints; ++i) {
      for (int j = 0; j < kNumJoints; ++j) {
        jac.d_out_d_params(row, i * kNumJoints + j) = g.d_eps(i, j);
        jac.d_out_d_params(row, 144 + i * kNumJoints + j) = g.d_phi(i, j);
      }
    }
  }
  return jac;
}

}  // namespace mlpcpg
