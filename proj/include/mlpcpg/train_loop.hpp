#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>
#include <vector>

#include "mlpcpg/sac.hpp"

namespace mlpcpg {

inline constexpr const char* kMetricsSchema = "mlpcpg-metrics v1";

struct TrainOptions {
  long total_steps = 200000;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  int workers = 1;
};

struct EpisodeRecord {
  long end_step = 0;
  double episode_return = 0.0;
  int length = 0;
};

struct TrainResult {
  std::vector<EpisodeRecord> episodes;
  std::string final_checkpoint;
};

namespace detail {

inline void write_metrics_header(std::ofstream& out) {
  out << "# " << kMetricsSchema << "\n"
      << "step,episode,return,critic_loss,actor_loss,l_t,l_s,l_f,alpha,"
         "mean_f,mean_f_ref\n";
}

struct EpisodeAccumulator {
  double ret = 0.0;
  int steps = 0;
  double sum_f = 0.0;
  double sum_f_ref = 0.0;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double l_t = 0.0, l_s = 0.0, l_f = 0.0;
  double alpha = 0.0;
  long updates = 0;

  void add_update(const UpdateStats& u) {
    critic_loss += u.critic_loss;
    actor_loss += u.actor_loss;
    l_t += u.l_temporal;
    l_s += u.l_spatial;
    l_f += u.l_frequency;
    alpha = u.alpha;
    ++updates;
  }

  void write_row(std::ofstream& out, long step, long episode) const {
    char buf[512];
    const double inv_u = updates > 0 ? 1.0 / static_cast<double>(updates) : 0.0;
    const double inv_s = steps > 0 ? 1.0 / static_cast<double>(steps) : 0.0;
    std::snprintf(buf, sizeof(buf),
                  "%ld,%ld,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n",
                  step, episode, ret, critic_loss * inv_u, actor_loss * inv_u,
                  l_t * inv_u, l_s * inv_u, l_f * inv_u, alpha, sum_f * inv_s,
                  sum_f_ref * inv_s);
    out << buf;
  }
};

}  // namespace detail

/// Single-worker training: alternates one 25 Hz policy step against the
/// environment with cfg.gradient_update_steps SAC updates. Deterministic for
/// a fixed seed. Writes the per-episode metrics CSV and a checkpoint series.
template <typename S>
TrainResult train(SacTrainerT<S>& trainer, const EnvConfig& env_cfg,
                  const TrainOptions& opt) {
  namespace fs = std::filesystem;
  fs::create_directories(opt.out_dir);
  std::ofstream metrics(fs::path(opt.out_dir) / "metrics.csv");
  if (!metrics) throw std::runtime_error("cannot write metrics.csv in " + opt.out_dir);
  detail::write_metrics_header(metrics);

  TrainResult result;
  const SacConfig& cfg = trainer.config();
  const PdConfig pd;
  const double policy_dt = env_cfg.substep_dt * env_cfg.substeps_per_policy_step;

  auto save_ckpt = [&](long step) {
    char name[64];
    std::snprintf(name, sizeof(name), "checkpoint_%08ld.ckpt", step);
    const std::string path = (fs::path(opt.out_dir) / name).string();
    policy_to_checkpoint(trainer.policy(), trainer.pipeline().normalizer).save(path);
    return path;
  };
  result.final_checkpoint = save_ckpt(0);
  if (opt.total_steps <= 0) return result;

  ResetResult ep = reset(env_cfg, trainer.rollout_rng());
  trainer.pipeline().reset_episode();
  VecX obs = assemble_observation(ep.robot, ep.goal, ep.cpg, trainer.pipeline());
  long episode = 0;
  long episode_step = 0;
  detail::EpisodeAccumulator acc;

  for (long step = 1; step <= opt.total_steps; ++step) {
    const ActResultT<S> act = trainer.policy().act(obs, ep.cpg, ActMode::kStochastic,
                                                   trainer.rollout_rng());
    const Vec12 q_cmd = filter_action(trainer.pipeline().filters, act.q_hat);
    for (int sub = 0; sub < env_cfg.substeps_per_policy_step; ++sub) {
      const Vec12 tau = pd_torque(pd, q_cmd, ep.robot.q, ep.robot.qd);
      ep.robot = env_step(ep.robot, tau, env_cfg);
    }
    ++episode_step;
    const double t = episode_step * policy_dt;
    ep.cpg = act.new_cpg;

    const double reward = compute_reward(ep.robot, ep.goal, env_cfg).total();
    const StepOutcome outcome = check_termination(ep.robot, t, env_cfg);
    const VecX next_obs =
        assemble_observation(ep.robot, ep.goal, ep.cpg, trainer.pipeline());

    trainer.buffer().add(obs.template cast<S>(), act.pre_squash, S(reward),
                         next_obs.template cast<S>(),
                         outcome == StepOutcome::kFail, act.fb.chi, act.fb.f);
    obs = next_obs;

    acc.ret += reward;
    acc.steps += 1;
    acc.sum_f += static_cast<double>(act.fb.f);
    {
      const double v = std::hypot(ep.goal.vx, ep.goal.vy);
      acc.sum_f_ref += f_ref(v);
    }

    if (trainer.buffer().size() >= std::max(cfg.warmup_steps, cfg.batch_size)) {
      for (int i = 0; i < cfg.gradient_update_steps; ++i) {
        try {
          acc.add_update(trainer.update());
        } catch (const std::exception& e) {
          std::ofstream dump(fs::path(opt.out_dir) / "nan_dump.txt");
          dump << "aborted at step " << step << " update " << i << ": " << e.what()
               << "\nalpha " << trainer.alpha() << "\nbuffer size "
               << trainer.buffer().size() << "\nlast observation:\n"
               << obs.transpose() << "\n";
          throw;
        }
      }
    }

    if (outcome != StepOutcome::kContinue) {
      acc.write_row(metrics, step, episode);
      result.episodes.push_back({step, acc.ret, acc.steps});
      acc = detail::EpisodeAccumulator{};
      ++episode;
      ep = reset(env_cfg, trainer.rollout_rng());
      trainer.pipeline().reset_episode();
      obs = assemble_observation(ep.robot, ep.goal, ep.cpg, trainer.pipeline());
      episode_step = 0;
    }
    if (cfg.checkpoint_interval > 0 && step % cfg.checkpoint_interval == 0) {
      result.final_checkpoint = save_ckpt(step);
    }
  }
  result.final_checkpoint = save_ckpt(opt.total_steps);
  return result;
}

namespace detail {

template <typename S>
struct TransitionChunk {
  std::vector<VecXT<S>> obs, next_obs;
  std::vector<Vec12T<S>> action, chi;
  std::vector<S> reward, f;
  std::vector<bool> done;
  EpisodeRecord record;
  bool episode_end = false;
};

}  // namespace detail

/// Multi-worker variant: N rollout threads collect episodes with snapshots
/// of the policy and push transitions through a bounded queue; the single
/// learner thread owns all parameters. Observation-normalizer statistics
/// freeze at the moment workers start. Not deterministic across runs.
template <typename S>
TrainResult train_multiworker(SacTrainerT<S>& trainer, const EnvConfig& env_cfg,
                              const TrainOptions& opt) {
  namespace fs = std::filesystem;
  fs::create_directories(opt.out_dir);
  std::ofstream metrics(fs::path(opt.out_dir) / "metrics.csv");
  detail::write_metrics_header(metrics);
  TrainResult result;
  const SacConfig& cfg = trainer.config();
  const PdConfig pd;
  const double policy_dt = env_cfg.substep_dt * env_cfg.substeps_per_policy_step;

  std::mutex param_mu;
  VecXT<S> param_snapshot = trainer.actor_params_flat();
  trainer.pipeline().update_stats = false;  // freeze stats in worker mode

  std::mutex queue_mu;
  std::condition_variable queue_cv;
  std::deque<detail::TransitionChunk<S>> queue;
  std::atomic<bool> stop{false};
  std::atomic<long> collected{0};

  auto worker_fn = [&](int worker_id) {
    Rng rng(opt.seed + 1000 + static_cast<std::uint64_t>(worker_id));
    PolicyT<S> local = trainer.policy();
    ObservationPipeline pipe;
    pipe.normalizer = trainer.pipeline().normalizer;
    pipe.update_stats = false;
    while (!stop.load()) {
      {
        std::lock_guard<std::mutex> lk(param_mu);
        local.freq_mode = trainer.policy().freq_mode;
        const VecXT<S> p = param_snapshot;
        local.mlp.net.flat() = p.head(local.mlp.net.flat().size());
        local.cpg = trainer.policy().cpg;
      }
      ResetResult ep = reset(env_cfg, rng);
      pipe.reset_episode();
      VecX obs = assemble_observation(ep.robot, ep.goal, ep.cpg, pipe);
      long episode_step = 0;
      detail::TransitionChunk<S> chunk;
      chunk.episode_end = true;
      while (!stop.load()) {
        const ActResultT<S> act = local.act(obs, ep.cpg, ActMode::kStochastic, rng);
        const Vec12 q_cmd = filter_action(pipe.filters, act.q_hat);
        for (int sub = 0; sub < env_cfg.substeps_per_policy_step; ++sub) {
          const Vec12 tau = pd_torque(pd, q_cmd, ep.robot.q, ep.robot.qd);
          ep.robot = env_step(ep.robot, tau, env_cfg);
        }
        const double t = ++episode_step * policy_dt;
        ep.cpg = act.new_cpg;
        const double reward = compute_reward(ep.robot, ep.goal, env_cfg).total();
        const StepOutcome outcome = check_termination(ep.robot, t, env_cfg);
        const VecX next_obs = assemble_observation(ep.robot, ep.goal, ep.cpg, pipe);
        chunk.obs.push_back(obs.template cast<S>());
        chunk.next_obs.push_back(next_obs.template cast<S>());
        chunk.action.push_back(act.pre_squash);
        chunk.chi.push_back(act.fb.chi);
        chunk.reward.push_back(S(reward));
        chunk.f.push_back(act.fb.f);
        chunk.done.push_back(outcome == StepOutcome::kFail);
        chunk.record.episode_return += reward;
        chunk.record.length += 1;
        obs = next_obs;
        if (outcome != StepOutcome::kContinue) break;
      }
      {
        std::unique_lock<std::mutex> lk(queue_mu);
        queue_cv.wait(lk, [&] { return queue.size() < 64 || stop.load(); });
        queue.push_back(std::move(chunk));
      }
      queue_cv.notify_all();
    }
  };

  std::vector<std::thread> workers;
  const int n_workers = std::max(1, opt.workers);
  workers.reserve(n_workers);
  for (int w = 0; w < n_workers; ++w) workers.emplace_back(worker_fn, w);

  long episode = 0;
  detail::EpisodeAccumulator acc;
  while (collected.load() < opt.total_steps) {
    detail::TransitionChunk<S> chunk;
    {
      std::unique_lock<std::mutex> lk(queue_mu);
      queue_cv.wait(lk, [&] { return !queue.empty(); });
      chunk = std::move(queue.front());
      queue.pop_front();
    }
    queue_cv.notify_all();
    for (std::size_t i = 0; i < chunk.obs.size(); ++i) {
      trainer.buffer().add(chunk.obs[i], chunk.action[i], chunk.reward[i],
                           chunk.next_obs[i], chunk.done[i], chunk.chi[i], chunk.f[i]);
      collected.fetch_add(1);
      acc.ret += static_cast<double>(chunk.reward[i]);
      acc.steps += 1;
      acc.sum_f += static_cast<double>(chunk.f[i]);
      if (trainer.buffer().size() >= std::max(cfg.warmup_steps, cfg.batch_size)) {
        for (int u = 0; u < cfg.gradient_update_steps; ++u) acc.add_update(trainer.update());
      }
    }
    acc.write_row(metrics, collected.load(), episode);
    result.episodes.push_back(
        {collected.load(), chunk.record.episode_return, chunk.record.length});
    acc = detail::EpisodeAccumulator{};
    ++episode;
    {
      std::lock_guard<std::mutex> lk(param_mu);
      param_snapshot = trainer.actor_params_flat();
    }
  }
  stop.store(true);
  queue_cv.notify_all();
  for (auto& th : workers) th.join();

  namespace fsn = std::filesystem;
  const std::string path = (fsn::path(opt.out_dir) / "checkpoint_final.ckpt").string();
  policy_to_checkpoint(trainer.policy(), trainer.pipeline().normalizer).save(path);
  result.final_checkpoint = path;
  return result;
}

}  // namespace mlpcpg
