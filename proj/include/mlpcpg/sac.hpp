#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mlpcpg/adam.hpp"
#include "mlpcpg/checkpoint.hpp"
#include "mlpcpg/cpg_grad.hpp"
#include "mlpcpg/env.hpp"
#include "mlpcpg/gait.hpp"
#include "mlpcpg/policy.hpp"
#include "mlpcpg/trajectory_log.hpp"
#include "mlpcpg/types.hpp"

namespace mlpcpg {

struct SacConfig {
  double discount = 0.95;
  double target_smoothing = 0.999;
  double learning_rate = 3e-4;
  double weight_decay = 1e-6;
  int batch_size = 128;
  int gradient_update_steps = 4;  // per environment step
  double lambda_temporal = 1e-3;
  double lambda_spatial = 1e-3;
  double lambda_frequency = 1e-2;
  int replay_capacity = 300000;
  int warmup_steps = 5000;
  double target_entropy = -static_cast<double>(kNumJoints);
  double perturbation_std = 0.05;  // spatial regularization delta
  int checkpoint_interval = 50000;
  int critic_hidden = 256;

  void validate() const {
    if (!(discount > 0.0 && discount < 1.0)) throw DomainError("discount must be in (0,1)");
    if (!(target_smoothing > 0.0 && target_smoothing < 1.0))
      throw DomainError("target_smoothing must be in (0,1)");
    if (lambda_temporal < 0 || lambda_spatial < 0 || lambda_frequency < 0)
      throw DomainError("regularization weights must be >= 0");
    if (batch_size < 1) throw DomainError("batch_size must be >= 1");
  }
};

/// Squared tracking error of the frequency head against the reference curve
/// for the commanded planar speed.
inline double frequency_loss(double f_out, const Goal& goal) {
  require_finite(goal.vx, "goal.vx");
  require_finite(goal.vy, "goal.vy");
  const double v = std::sqrt(goal.vx * goal.vx + goal.vy * goal.vy);
  const double ref = f_ref(v);
  return (f_out - ref) * (f_out - ref);
}

/// Temporal and spatial regularization on the setpoint feedback head:
/// L_T = ||chi(s_t) - chi(s_t1)||^2, L_S = ||chi(s_t) - chi(s_hat)||^2 with
/// s_hat ~ N(s_t, delta).
template <typename S>
std::pair<double, double> regularization_losses(const MlpParamsT<S>& mlp,
                                                const VecX& s_t, const VecX& s_t1,
                                                double delta, Rng& rng) {
  const FeedbackHeadT<S> h_t = mlp_forward<S>(mlp, s_t.template cast<S>());
  const FeedbackHeadT<S> h_t1 = mlp_forward<S>(mlp, s_t1.template cast<S>());
  VecX s_hat = s_t;
  for (Eigen::Index i = 0; i < s_hat.size(); ++i) s_hat[i] += delta * rng.normal();
  const FeedbackHeadT<S> h_hat = mlp_forward<S>(mlp, s_hat.template cast<S>());
  const double l_t = (h_t.fb.chi - h_t1.fb.chi).squaredNorm();
  const double l_s = (h_t.fb.chi - h_hat.fb.chi).squaredNorm();
  return {l_t, l_s};
}

/// Uniform-sampling ring buffer of transitions, stored column-wise.
template <typename S>
class ReplayBufferT {
 public:
  explicit ReplayBufferT(int capacity = 0) { resize(capacity); }

  void resize(int capacity) {
    cap_ = capacity;
    obs_.setZero(kObsDim, capacity);
    next_obs_.setZero(kObsDim, capacity);
    action_.setZero(kNumJoints, capacity);
    reward_.setZero(capacity);
    done_.setZero(capacity);
    chi_.setZero(kNumJoints, capacity);
    f_.setZero(capacity);
    size_ = 0;
    cursor_ = 0;
  }

  void add(const VecXT<S>& obs, const Vec12T<S>& action, S reward,
           const VecXT<S>& next_obs, bool done, const Vec12T<S>& chi, S f) {
    obs_.col(cursor_) = obs;
    next_obs_.col(cursor_) = next_obs;
    action_.col(cursor_) = action;
    reward_[cursor_] = reward;
    done_[cursor_] = done ? S(1) : S(0);
    chi_.col(cursor_) = chi;
    f_[cursor_] = f;
    cursor_ = (cursor_ + 1) % cap_;
    size_ = std::min(size_ + 1, cap_);
  }

  int size() const { return size_; }
  int capacity() const { return cap_; }

  struct Batch {
    MatXT<S> obs;       // 60 x B
    MatXT<S> action;    // 12 x B
    VecXT<S> reward;    // B
    VecXT<S> done;      // B
    MatXT<S> next_obs;  // 60 x B
  };

  Batch sample(int batch_size, Rng& rng) const {
    if (size_ < batch_size) throw DomainError("replay buffer smaller than batch");
    Batch b;
    b.obs.resize(kObsDim, batch_size);
    b.action.resize(kNumJoints, batch_size);
    b.reward.resize(batch_size);
    b.done.resize(batch_size);
    b.next_obs.resize(kObsDim, batch_size);
    for (int k = 0; k < batch_size; ++k) {
      const auto idx = static_cast<Eigen::Index>(rng.index(size_));
      b.obs.col(k) = obs_.col(idx);
      b.action.col(k) = action_.col(idx);
      b.reward[k] = reward_[idx];
      b.done[k] = done_[idx];
      b.next_obs.col(k) = next_obs_.col(idx);
    }
    return b;
  }

 private:
  int cap_ = 0, size_ = 0, cursor_ = 0;
  MatXT<S> obs_, next_obs_, action_, chi_;
  VecXT<S> reward_, done_, f_;
};

using ReplayBuffer = ReplayBufferT<double>;

/// Per-update loss report. total_actor is the exact weighted sum of the
/// parts (the decomposition identity is asserted in tests).
struct UpdateStats {
  double critic_loss = 0.0;
  double actor_loss = 0.0;  // L_SAC part
  double l_temporal = 0.0;
  double l_spatial = 0.0;
  double l_frequency = 0.0;
  double total_actor = 0.0;
  double alpha = 0.0;
  double mean_log_pi = 0.0;
};

/// Soft actor-critic with twin critics, automatic temperature, and the
/// temporal/spatial/frequency auxiliary losses. Gradients reach the CPG
/// couplings through the single-step VJP of cpg_step; the previous-step
/// oscillator state enters as data through the observation, never as a
/// backpropagation path.
template <typename S>
class SacTrainerT {
 public:
  SacTrainerT(const SacConfig& cfg, const EnvConfig& env_cfg, FrequencyMode mode,
              std::uint64_t seed)
      : cfg_(cfg),
        env_cfg_(env_cfg),
        buffer_(cfg.replay_capacity),
        rollout_rng_(seed),
        update_rng_(seed ^ 0x9e3779b97f4a7c15ull),
        critic1_(kObsDim + kNumJoints, cfg.critic_hidden, 1),
        critic2_(kObsDim + kNumJoints, cfg.critic_hidden, 1),
        target1_(kObsDim + kNumJoints, cfg.critic_hidden, 1),
        target2_(kObsDim + kNumJoints, cfg.critic_hidden, 1) {
    cfg_.validate();
    policy_.freq_mode = mode;
    policy_.init(rollout_rng_);
    critic1_.init(rollout_rng_, S(1));
    critic2_.init(rollout_rng_, S(1));
    target1_.flat() = critic1_.flat();
    target2_.flat() = critic2_.flat();

    const auto n_actor = actor_param_count();
    opt_actor_ = AdamT<S>(n_actor, S(cfg.learning_rate), S(cfg.weight_decay));
    opt_critic1_ = AdamT<S>(critic1_.flat().size(), S(cfg.learning_rate),
                            S(cfg.weight_decay));
    opt_critic2_ = AdamT<S>(critic2_.flat().size(), S(cfg.learning_rate),
                            S(cfg.weight_decay));
    opt_alpha_ = AdamT<S>(1, S(cfg.learning_rate));
    log_alpha_.setZero(1);
    if (pinned_frequency(mode).has_value() || mode == FrequencyMode::kAdaptiveFree) {
      cfg_.lambda_frequency = 0.0;
    }
  }

  PolicyT<S>& policy() { return policy_; }
  const PolicyT<S>& policy() const { return policy_; }
  ObservationPipeline& pipeline() { return pipeline_; }
  ReplayBufferT<S>& buffer() { return buffer_; }
  const SacConfig& config() const { return cfg_; }
  double alpha() const { return std::max(1e-6, std::exp(static_cast<double>(log_alpha_[0]))); }
  void set_log_alpha(S v) { log_alpha_[0] = v; }
  DenseNetT<S>& critic1() { return critic1_; }
  DenseNetT<S>& critic2() { return critic2_; }
  DenseNetT<S>& target1() { return target1_; }
  DenseNetT<S>& target2() { return target2_; }

  using Batch = typename ReplayBufferT<S>::Batch;

  /// Policy heads plus the oscillator step recomputed for a batch of stored
  /// observations; everything the actor/critic updates need.
  struct PolicyEval {
    MlpBatchOutT<S> mlp;
    MatXT<S> psi;       // 12 x B
    MatXT<S> u;         // sampled pre-squash action
    MatXT<S> noise;     // reparameterization noise
    VecXT<S> log_pi;    // B
  };

  PolicyEval eval_policy(const MatXT<S>& obs, Rng& rng) {
    PolicyEval ev;
    ev.mlp = mlp_forward_batch<S>(policy_.mlp, obs);
    const auto pinned = pinned_frequency(policy_.freq_mode);
    if (pinned) ev.mlp.f.setConstant(S(*pinned));
    const Eigen::Index batch = obs.cols();
    ev.psi.resize(kNumJoints, batch);
    ev.u.resize(kNumJoints, batch);
    ev.noise.resize(kNumJoints, batch);
    ev.log_pi.setZero(batch);
    for (Eigen::Index k = 0; k < batch; ++k) {
      CpgStateT<S> st;
      st.r = obs.col(k).template segment<kNumJoints>(kCpgROffset);
      st.theta = obs.col(k).template segment<kNumJoints>(kCpgThetaOffset);
      FeedbackSignalsT<S> fb;
      fb.f = ev.mlp.f(0, k);
      fb.kappa = ev.mlp.kappa.col(k);
      fb.xi = ev.mlp.xi.col(k);
      fb.chi = ev.mlp.chi.col(k);
      const CpgOutputT<S> out = cpg_step<S>(st, policy_.cpg, fb);
      ev.psi.col(k) = out.psi;
      S lp = S(0);
      for (int i = 0; i < kNumJoints; ++i) {
        const S z = S(rng.normal());
        const S sigma = ev.mlp.sigma(i, k);
        const S u = out.psi[i] + sigma * z;
        ev.noise(i, k) = z;
        ev.u(i, k) = u;
        lp += S(-0.5) * z * z - std::log(sigma) - S(0.5) * std::log(S(kTwoPi)) -
              log_one_minus_tanh_sq(u);
      }
      ev.log_pi[k] = lp;
    }
    return ev;
  }

  /// Twin-Q TD update with Polyak-averaged targets.
  double critic_update(const Batch& batch) {
    const Eigen::Index B = batch.obs.cols();
    PolicyEval next = eval_policy(batch.next_obs, update_rng_);

    MatXT<S> in_next(kObsDim + kNumJoints, B);
    in_next.topRows(kObsDim) = batch.next_obs;
    in_next.bottomRows(kNumJoints) = next.u;
    const MatXT<S> q1t = target1_.forward(in_next);
    const MatXT<S> q2t = target2_.forward(in_next);
    const S alpha_s = S(alpha());

    VecXT<S> y(B);
    for (Eigen::Index k = 0; k < B; ++k) {
      const S qmin = std::min(q1t(0, k), q2t(0, k));
      y[k] = batch.reward[k] + S(cfg_.discount) * (S(1) - batch.done[k]) *
                                   (qmin - alpha_s * next.log_pi[k]);
    }

    MatXT<S> in(kObsDim + kNumJoints, B);
    in.topRows(kObsDim) = batch.obs;
    in.bottomRows(kNumJoints) = batch.action;
    typename DenseNetT<S>::Cache c1, c2;
    const MatXT<S> q1 = critic1_.forward(in, &c1);
    const MatXT<S> q2 = critic2_.forward(in, &c2);

    MatXT<S> d1(1, B), d2(1, B);
    double loss = 0.0;
    for (Eigen::Index k = 0; k < B; ++k) {
      const S e1 = q1(0, k) - y[k];
      const S e2 = q2(0, k) - y[k];
      loss += 0.5 * (static_cast<double>(e1) * static_cast<double>(e1) +
                     static_cast<double>(e2) * static_cast<double>(e2));
      d1(0, k) = S(2) * e1 / S(B);
      d2(0, k) = S(2) * e2 / S(B);
    }
    loss /= static_cast<double>(B);

    VecXT<S> g1 = VecXT<S>::Zero(critic1_.flat().size());
    VecXT<S> g2 = VecXT<S>::Zero(critic2_.flat().size());
    critic1_.backward(c1, d1, &g1);
    critic2_.backward(c2, d2, &g2);
    opt_critic1_.step(critic1_.flat(), g1);
    opt_critic2_.step(critic2_.flat(), g2);

    const S tau = S(cfg_.target_smoothing);
    target1_.flat() = tau * target1_.flat() + (S(1) - tau) * critic1_.flat();
    target2_.flat() = tau * target2_.flat() + (S(1) - tau) * critic2_.flat();
    return loss;
  }

  /// Forward evaluation of the actor objective on a batch, with explicit
  /// reparameterization noise and spatial perturbations so the same function
  /// serves the update path and the finite-difference oracle. The MLP runs
  /// once over [s | s' | s_hat] stacked column-wise.
  struct ActorForward {
    MlpBatchOutT<S> heads;           // over the stacked 3B columns
    MatXT<S> u, noise;               // sampled pre-squash actions, 12 x B
    VecXT<S> log_pi, f_err;          // per item
    std::vector<CpgStateT<S>> states;
    std::vector<FeedbackSignalsT<S>> fbs;
    typename DenseNetT<S>::Cache c1, c2;
    MatXT<S> q1, q2;
    double l_sac = 0, l_t = 0, l_s = 0, l_f = 0;
    double mean_log_pi = 0;
  };

  ActorForward actor_forward(const Batch& batch, const MatXT<S>& noise,
                             const MatXT<S>& obs_hat) const {
    const Eigen::Index B = batch.obs.cols();
    ActorForward fwd;
    fwd.noise = noise;

    MatXT<S> stacked(kObsDim, 3 * B);
    stacked.leftCols(B) = batch.obs;
    stacked.middleCols(B, B) = batch.next_obs;
    stacked.rightCols(B) = obs_hat;
    fwd.heads = mlp_forward_batch<S>(policy_.mlp, stacked);
    const auto pinned = pinned_frequency(policy_.freq_mode);
    if (pinned) fwd.heads.f.setConstant(S(*pinned));

    fwd.u.resize(kNumJoints, B);
    fwd.log_pi.resize(B);
    fwd.states.resize(B);
    fwd.fbs.resize(B);
    for (Eigen::Index k = 0; k < B; ++k) {
      CpgStateT<S>& st = fwd.states[k];
      st.r = batch.obs.col(k).template segment<kNumJoints>(kCpgROffset);
      st.theta = batch.obs.col(k).template segment<kNumJoints>(kCpgThetaOffset);
      FeedbackSignalsT<S>& fb = fwd.fbs[k];
      fb.f = fwd.heads.f(0, k);
      fb.kappa = fwd.heads.kappa.col(k);
      fb.xi = fwd.heads.xi.col(k);
      fb.chi = fwd.heads.chi.col(k);
      const CpgOutputT<S> out = cpg_step<S>(st, policy_.cpg, fb);
      S lp = S(0);
      for (int i = 0; i < kNumJoints; ++i) {
        const S sigma = fwd.heads.sigma(i, k);
        const S ui = out.psi[i] + sigma * noise(i, k);
        fwd.u(i, k) = ui;
        lp += S(-0.5) * noise(i, k) * noise(i, k) - std::log(sigma) -
              S(0.5) * std::log(S(kTwoPi)) - log_one_minus_tanh_sq(ui);
      }
      fwd.log_pi[k] = lp;
    }

    MatXT<S> in(kObsDim + kNumJoints, B);
    in.topRows(kObsDim) = batch.obs;
    in.bottomRows(kNumJoints) = fwd.u;
    fwd.q1 = critic1_.forward(in, &fwd.c1);
    fwd.q2 = critic2_.forward(in, &fwd.c2);

    const S alpha_s = S(alpha());
    for (Eigen::Index k = 0; k < B; ++k) {
      const S qmin = std::min(fwd.q1(0, k), fwd.q2(0, k));
      fwd.l_sac += static_cast<double>(alpha_s * fwd.log_pi[k] - qmin);
      fwd.mean_log_pi += static_cast<double>(fwd.log_pi[k]);
    }
    fwd.l_sac /= static_cast<double>(B);
    fwd.mean_log_pi /= static_cast<double>(B);

    auto chi_t = fwd.heads.chi.leftCols(B);
    auto chi_t1 = fwd.heads.chi.middleCols(B, B);
    auto chi_hat = fwd.heads.chi.rightCols(B);
    fwd.l_t = static_cast<double>((chi_t - chi_t1).squaredNorm()) / B;
    fwd.l_s = static_cast<double>((chi_t - chi_hat).squaredNorm()) / B;

    fwd.f_err.resize(B);
    for (Eigen::Index k = 0; k < B; ++k) {
      const double gvx = static_cast<double>(batch.obs(kGoalOffset + 0, k));
      const double gvy = static_cast<double>(batch.obs(kGoalOffset + 1, k));
      const double ref = f_ref(std::sqrt(gvx * gvx + gvy * gvy));
      fwd.f_err[k] = fwd.heads.f(0, k) - S(ref);
      fwd.l_f += static_cast<double>(fwd.f_err[k]) * static_cast<double>(fwd.f_err[k]);
    }
    fwd.l_f /= static_cast<double>(B);
    return fwd;
  }

  double actor_total_loss(const ActorForward& fwd) const {
    return fwd.l_sac + cfg_.lambda_temporal * fwd.l_t + cfg_.lambda_spatial * fwd.l_s +
           cfg_.lambda_frequency * fwd.l_f;
  }

  /// Gradient of the total actor loss w.r.t. [mlp | eps | phi], exactly the
  /// vector the update feeds into the optimizer.
  VecXT<S> actor_gradient(const Batch& batch, const ActorForward& fwd) const {
    const Eigen::Index B = batch.obs.cols();
    const auto pinned = pinned_frequency(policy_.freq_mode);
    const S alpha_s = S(alpha());

    MatXT<S> dq1(1, B), dq2(1, B);
    for (Eigen::Index k = 0; k < B; ++k) {
      const bool first = fwd.q1(0, k) <= fwd.q2(0, k);
      dq1(0, k) = first ? S(-1) / S(B) : S(0);
      dq2(0, k) = first ? S(0) : S(-1) / S(B);
    }
    MatXT<S> din1, din2;
    critic1_.backward(fwd.c1, dq1, nullptr, &din1);
    critic2_.backward(fwd.c2, dq2, nullptr, &din2);
    const MatXT<S> d_u_q = din1.bottomRows(kNumJoints) + din2.bottomRows(kNumJoints);

    MlpUpstreamT<S> up = MlpUpstreamT<S>::zero(3 * B);
    Mat12T<S> d_eps_acc = Mat12T<S>::Zero();
    Mat12T<S> d_phi_acc = Mat12T<S>::Zero();
    for (Eigen::Index k = 0; k < B; ++k) {
      Vec12T<S> d_psi, d_sigma;
      for (int i = 0; i < kNumJoints; ++i) {
        const S tanh_u = std::tanh(fwd.u(i, k));
        const S dlp_du = S(2) * tanh_u;  // -d log(1 - tanh^2)/du
        d_psi[i] = (alpha_s * dlp_du) / S(B) + d_u_q(i, k);
        d_sigma[i] =
            (alpha_s * (S(-1) / fwd.heads.sigma(i, k) + dlp_du * fwd.noise(i, k))) /
                S(B) +
            d_u_q(i, k) * fwd.noise(i, k);
      }
      CpgUpstreamT<S> cup;
      cup.d_psi = d_psi;
      const CpgStepGradsT<S> g =
          cpg_step_backward<S>(fwd.states[k], policy_.cpg, fwd.fbs[k], cup);
      d_eps_acc += g.d_eps;
      d_phi_acc += g.d_phi;
      if (!pinned)
        up.d_f(0, k) =
            g.d_f + S(2) * S(cfg_.lambda_frequency) * fwd.f_err[k] / S(B);
      up.d_kappa.col(k) = g.d_kappa;
      up.d_xi.col(k) = g.d_xi;
      up.d_chi.col(k) = g.d_chi;
      up.d_sigma.col(k) = d_sigma;
    }
    auto chi_t = fwd.heads.chi.leftCols(B);
    auto chi_t1 = fwd.heads.chi.middleCols(B, B);
    auto chi_hat = fwd.heads.chi.rightCols(B);
    const S two_over_b = S(2) / S(B);
    up.d_chi.leftCols(B) += two_over_b * (S(cfg_.lambda_temporal) * (chi_t - chi_t1) +
                                          S(cfg_.lambda_spatial) * (chi_t - chi_hat));
    up.d_chi.middleCols(B, B) += two_over_b * S(cfg_.lambda_temporal) * (chi_t1 - chi_t);
    up.d_chi.rightCols(B) += two_over_b * S(cfg_.lambda_spatial) * (chi_hat - chi_t);

    VecXT<S> grads(actor_param_count());
    VecXT<S> g_mlp = VecXT<S>::Zero(policy_.mlp.net.flat().size());
    mlp_backward_batch<S>(policy_.mlp, fwd.heads, up, &g_mlp);
    grads.head(g_mlp.size()) = g_mlp;
    Eigen::Map<Mat12T<S>>(grads.data() + g_mlp.size()) = d_eps_acc;
    Eigen::Map<Mat12T<S>>(grads.data() + g_mlp.size() + 144) = d_phi_acc;
    return grads;
  }

  /// Actor update: L = L_SAC + lambda_T L_T + lambda_S L_S + lambda_f L_f.
  UpdateStats actor_update(const Batch& batch) {
    const Eigen::Index B = batch.obs.cols();
    MatXT<S> noise(kNumJoints, B);
    for (Eigen::Index k = 0; k < B; ++k)
      for (int i = 0; i < kNumJoints; ++i) noise(i, k) = S(update_rng_.normal());
    MatXT<S> obs_hat = batch.obs;
    for (Eigen::Index k = 0; k < B; ++k)
      for (Eigen::Index i = 0; i < kObsDim; ++i)
        obs_hat(i, k) += S(cfg_.perturbation_std) * S(update_rng_.normal());

    const ActorForward fwd = actor_forward(batch, noise, obs_hat);
    const VecXT<S> grads = actor_gradient(batch, fwd);
    VecXT<S> params = actor_params_flat();
    opt_actor_.step(params, grads);
    set_actor_params_flat(params);
    policy_.cpg.eps.diagonal().setZero();

    UpdateStats stats;
    stats.actor_loss = fwd.l_sac;
    stats.l_temporal = fwd.l_t;
    stats.l_spatial = fwd.l_s;
    stats.l_frequency = fwd.l_f;
    stats.total_actor = actor_total_loss(fwd);
    stats.mean_log_pi = fwd.mean_log_pi;
    return stats;
  }

  /// Gradient step on log alpha toward the entropy target.
  double temperature_update(double mean_log_pi) {
    VecXT<S> grad(1);
    grad[0] = S(-(mean_log_pi + cfg_.target_entropy));
    opt_alpha_.step(log_alpha_, grad);
    return alpha();
  }

  /// One full gradient update (critic, actor, temperature) on a sampled batch.
  UpdateStats update() {
    const Batch batch = buffer_.sample(cfg_.batch_size, update_rng_);
    UpdateStats stats;
    stats.critic_loss = critic_update(batch);
    const UpdateStats actor = actor_update(batch);
    stats.actor_loss = actor.actor_loss;
    stats.l_temporal = actor.l_temporal;
    stats.l_spatial = actor.l_spatial;
    stats.l_frequency = actor.l_frequency;
    stats.total_actor = actor.total_actor;
    stats.mean_log_pi = actor.mean_log_pi;
    stats.alpha = temperature_update(actor.mean_log_pi);
    if (!std::isfinite(stats.critic_loss) || !std::isfinite(stats.total_actor)) {
      throw std::runtime_error("NaN loss encountered during SAC update");
    }
    return stats;
  }

  VecXT<S> actor_params_flat() const {
    const auto n_mlp = policy_.mlp.net.flat().size();
    VecXT<S> p(n_mlp + 288);
    p.head(n_mlp) = policy_.mlp.net.flat();
    Eigen::Map<Mat12T<S>>(p.data() + n_mlp) = policy_.cpg.eps;
    Eigen::Map<Mat12T<S>>(p.data() + n_mlp + 144) = policy_.cpg.phi;
    return p;
  }

  void set_actor_params_flat(const VecXT<S>& p) {
    const auto n_mlp = policy_.mlp.net.flat().size();
    policy_.mlp.net.flat() = p.head(n_mlp);
    policy_.cpg.eps = Eigen::Map<const Mat12T<S>>(p.data() + n_mlp);
    policy_.cpg.phi = Eigen::Map<const Mat12T<S>>(p.data() + n_mlp + 144);
  }

  Eigen::Index actor_param_count() const {
    return policy_.mlp.net.flat().size() + 288;
  }

  Rng& update_rng() { return update_rng_; }
  Rng& rollout_rng() { return rollout_rng_; }

 private:
  SacConfig cfg_;
  EnvConfig env_cfg_;
  PolicyT<S> policy_;
  ObservationPipeline pipeline_;
  ReplayBufferT<S> buffer_;
  Rng rollout_rng_, update_rng_;
  DenseNetT<S> critic1_, critic2_, target1_, target2_;
  AdamT<S> opt_actor_, opt_critic1_, opt_critic2_, opt_alpha_;
  VecXT<S> log_alpha_;
};

using SacTrainer = SacTrainerT<float>;

}  // namespace mlpcpg
