#pragma once

#include <cmath>

#include "mlpcpg/cpg.hpp"
#include "mlpcpg/net.hpp"
#include "mlpcpg/types.hpp"

namespace mlpcpg {

inline constexpr int kMlpHidden = 256;
inline constexpr int kHeadDim = 1 + 4 * kNumJoints;  // f, kappa, xi, chi, log_sigma
inline constexpr double kLogSigmaMin = -20.0;
inline constexpr double kLogSigmaMax = 2.0;

/// Feedback network: observation -> raw head -> squashed feedback components
/// plus the stochastic-policy standard deviation.
///
/// Head mappings:
///   f     = 1.5 * (tanh(f_raw) + 1)        in [0, 3]
///   kappa = tanh(kappa_raw)                in [-1, 1]
///   xi    = 2*pi * tanh(xi_raw)            in [-2*pi, 2*pi]
///   chi   = 0.5 * tanh(chi_raw)            in [-0.5, 0.5]
///   sigma = exp(clamp(log_sigma, -20, 2))
template <typename S>
struct MlpParamsT {
  DenseNetT<S> net = DenseNetT<S>(kObsDim, kMlpHidden, kHeadDim);

  void init(Rng& rng) { net.init(rng, S(0.01)); }
  void validate() const { require_finite(net.flat(), "mlp params"); }
};

template <typename S>
struct FeedbackHeadT {
  FeedbackSignalsT<S> fb;
  Vec12T<S> sigma = Vec12T<S>::Ones();
};

using MlpParams = MlpParamsT<double>;
using FeedbackHead = FeedbackHeadT<double>;

/// Batched head values kept in raw+squashed form so the backward pass can
/// reuse them. Columns are batch items.
template <typename S>
struct MlpBatchOutT {
  typename DenseNetT<S>::Cache cache;
  MatXT<S> raw;        // kHeadDim x B
  MatXT<S> f;          // 1 x B
  MatXT<S> kappa;      // 12 x B
  MatXT<S> xi;         // 12 x B
  MatXT<S> chi;        // 12 x B
  MatXT<S> sigma;      // 12 x B
};

template <typename S>
MlpBatchOutT<S> mlp_forward_batch(const MlpParamsT<S>& params, const MatXT<S>& obs) {
  if (obs.rows() != kObsDim) throw DomainError("observation dimension must be 60");
  if (!obs.allFinite()) throw DomainError("non-finite value in observation");
  params.validate();

  MlpBatchOutT<S> out;
  out.raw = params.net.forward(obs, &out.cache);
  const auto& r = out.raw;
  out.f = (S(1.5) * (r.row(0).array().tanh() + S(1))).matrix();
  out.kappa = r.middleRows(1, kNumJoints).array().tanh().matrix();
  out.xi = (S(kTwoPi) * r.middleRows(1 + kNumJoints, kNumJoints).array().tanh()).matrix();
  out.chi = (S(0.5) * r.middleRows(1 + 2 * kNumJoints, kNumJoints).array().tanh()).matrix();
  out.sigma = r.middleRows(1 + 3 * kNumJoints, kNumJoints)
                  .array()
                  .min(S(kLogSigmaMax))
                  .max(S(kLogSigmaMin))
                  .exp()
                  .matrix();
  return out;
}

template <typename S>
FeedbackHeadT<S> mlp_forward(const MlpParamsT<S>& params, const VecXT<S>& obs) {
  MlpBatchOutT<S> b = mlp_forward_batch<S>(params, obs);
  FeedbackHeadT<S> head;
  head.fb.f = b.f(0, 0);
  head.fb.kappa = b.kappa.col(0);
  head.fb.xi = b.xi.col(0);
  head.fb.chi = b.chi.col(0);
  head.sigma = b.sigma.col(0);
  return head;
}

/// Upstream gradients for the batched backward pass (same shapes as the
/// squashed outputs).
template <typename S>
struct MlpUpstreamT {
  MatXT<S> d_f, d_kappa, d_xi, d_chi, d_sigma;

  static MlpUpstreamT zero(int batch) {
    MlpUpstreamT u;
    u.d_f.setZero(1, batch);
    u.d_kappa.setZero(kNumJoints, batch);
    u.d_xi.setZero(kNumJoints, batch);
    u.d_chi.setZero(kNumJoints, batch);
    u.d_sigma.setZero(kNumJoints, batch);
    return u;
  }
};

/// VJP of mlp_forward_batch including the head squashings. Accumulates into
/// grad_flat; optionally reports the gradient w.r.t. the observations.
template <typename S>
void mlp_backward_batch(const MlpParamsT<S>& params, const MlpBatchOutT<S>& fwd,
                        const MlpUpstreamT<S>& up, VecXT<S>* grad_flat,
                        MatXT<S>* d_obs = nullptr) {
  const Eigen::Index batch = fwd.raw.cols();
  MatXT<S> d_raw(kHeadDim, batch);

  // d tanh(x) = 1 - tanh(x)^2; recover tanh values from the squashed outputs.
  d_raw.row(0) = (up.d_f.array() * S(1.5) *
                  (S(1) - (fwd.f.array() / S(1.5) - S(1)).square()))
                     .matrix();
  d_raw.middleRows(1, kNumJoints) =
      (up.d_kappa.array() * (S(1) - fwd.kappa.array().square())).matrix();
  d_raw.middleRows(1 + kNumJoints, kNumJoints) =
      (up.d_xi.array() * S(kTwoPi) *
       (S(1) - (fwd.xi.array() / S(kTwoPi)).square()))
          .matrix();
  d_raw.middleRows(1 + 2 * kNumJoints, kNumJoints) =
      (up.d_chi.array() * S(0.5) * (S(1) - (fwd.chi.array() / S(0.5)).square()))
          .matrix();
  // sigma = exp(log_sigma) with the clamp gating the gradient at the bounds.
  {
    auto ls_raw = fwd.raw.middleRows(1 + 3 * kNumJoints, kNumJoints).array();
    auto gate = ((ls_raw > S(kLogSigmaMin)) && (ls_raw < S(kLogSigmaMax)))
                    .template cast<S>();
    d_raw.middleRows(1 + 3 * kNumJoints, kNumJoints) =
        (up.d_sigma.array() * fwd.sigma.array() * gate).matrix();
  }

  params.net.backward(fwd.cache, d_raw, grad_flat, d_obs);
}

/// Single-observation VJP; returns the parameter gradient vector and
/// optionally the gradient w.r.t. the observation.
template <typename S>
VecXT<S> mlp_backward(const MlpParamsT<S>& params, const VecXT<S>& obs,
                      const FeedbackSignalsT<S>& d_fb, const Vec12T<S>& d_sigma,
                      VecXT<S>* d_obs_out = nullptr) {
  MlpBatchOutT<S> fwd = mlp_forward_batch<S>(params, obs);
  MlpUpstreamT<S> up = MlpUpstreamT<S>::zero(1);
  up.d_f(0, 0) = d_fb.f;
  up.d_kappa.col(0) = d_fb.kappa;
  up.d_xi.col(0) = d_fb.xi;
  up.d_chi.col(0) = d_fb.chi;
  up.d_sigma.col(0) = d_sigma;
  VecXT<S> grad = VecXT<S>::Zero(params.net.flat().size());
  MatXT<S> d_obs;
  mlp_backward_batch<S>(params, fwd, up, &grad, d_obs_out ? &d_obs : nullptr);
  if (d_obs_out) *d_obs_out = d_obs.col(0);
  return grad;
}

}  // namespace mlpcpg
