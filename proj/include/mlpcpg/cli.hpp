#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "mlpcpg/follow.hpp"
#include "mlpcpg/gait.hpp"
#include "mlpcpg/rollout.hpp"
#include "mlpcpg/train_loop.hpp"

namespace mlpcpg {

/// Exit codes: 0 ok, 1 user error (bad config / missing inputs), 2 runtime
/// abort (NaN loss and other internal failures).
inline constexpr int kExitOk = 0;
inline constexpr int kExitUserError = 1;
inline constexpr int kExitRuntime = 2;

class UserError : public std::runtime_error {
 public:
  explicit UserError(const std::string& what) : std::runtime_error(what) {}
};

/// Flat dotted-key configuration ("sac.batch_size = 128"). Command-line
/// flags override file values.
class RunConfig {
 public:
  void load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UserError("config file not found: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        if (line.find_first_not_of(" \t\r\n") != std::string::npos)
          throw UserError(path + ":" + std::to_string(lineno) +
                          ": expected 'key = value'");
        continue;
      }
      values_[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }
  double get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      std::size_t pos = 0;
      const double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("");
      return v;
    } catch (...) {
      throw UserError("config field '" + key + "' is not a number: " + it->second);
    }
  }
  long get_long(const std::string& key, long fallback) const {
    const double v = get_double(key, static_cast<double>(fallback));
    const long l = static_cast<long>(v);
    if (static_cast<double>(l) != v)
      throw UserError("config field '" + key + "' is not an integer");
    return l;
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }
  std::map<std::string, std::string> values_;
};

namespace detail {

inline bool log_enabled() {
  const char* v = std::getenv("MLPCPG_LOG");
  return v == nullptr || std::string(v) != "quiet";
}

inline void log_info(const std::string& msg) {
  if (log_enabled()) std::fprintf(stderr, "[mlpcpg] %s\n", msg.c_str());
}

inline std::string git_describe() {
  std::string result = "unknown";
  if (FILE* p = popen("git describe --always --dirty 2>/dev/null", "r")) {
    char buf[128];
    if (std::fgets(buf, sizeof(buf), p)) {
      result = buf;
      while (!result.empty() && (result.back() == '\n' || result.back() == '\r'))
        result.pop_back();
    }
    pclose(p);
  }
  return result.empty() ? "unknown" : result;
}

inline void write_manifest(const RunConfig& cfg, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::ofstream out(std::filesystem::path(out_dir) / "manifest.txt");
  out << "# mlpcpg-run-manifest v1\n";
  out << "git = " << git_describe() << "\n";
  for (const auto& [k, v] : cfg.values()) out << k << " = " << v << "\n";
}

inline EnvConfig env_config_from(const RunConfig& cfg) {
  EnvConfig e;
  e.desired_base_height = cfg.get_double("env.desired_base_height", e.desired_base_height);
  e.desired_foot_clearance =
      cfg.get_double("env.desired_foot_clearance", e.desired_foot_clearance);
  e.time_limit = cfg.get_double("env.time_limit", e.time_limit);
  e.joint_inertia = cfg.get_double("env.joint_inertia", e.joint_inertia);
  e.joint_damping = cfg.get_double("env.joint_damping", e.joint_damping);
  return e;
}

inline SacConfig sac_config_from(const RunConfig& cfg) {
  SacConfig s;
  s.discount = cfg.get_double("sac.discount", s.discount);
  s.target_smoothing = cfg.get_double("sac.target_smoothing", s.target_smoothing);
  s.learning_rate = cfg.get_double("sac.learning_rate", s.learning_rate);
  s.weight_decay = cfg.get_double("sac.weight_decay", s.weight_decay);
  s.batch_size = static_cast<int>(cfg.get_long("sac.batch_size", s.batch_size));
  s.gradient_update_steps =
      static_cast<int>(cfg.get_long("sac.gradient_update_steps", s.gradient_update_steps));
  s.lambda_temporal = cfg.get_double("sac.lambda_temporal", s.lambda_temporal);
  s.lambda_spatial = cfg.get_double("sac.lambda_spatial", s.lambda_spatial);
  s.lambda_frequency = cfg.get_double("sac.lambda_frequency", s.lambda_frequency);
  s.replay_capacity = static_cast<int>(cfg.get_long("sac.replay_capacity", s.replay_capacity));
  s.warmup_steps = static_cast<int>(cfg.get_long("sac.warmup_steps", s.warmup_steps));
  s.checkpoint_interval =
      static_cast<int>(cfg.get_long("sac.checkpoint_interval", s.checkpoint_interval));
  s.critic_hidden = static_cast<int>(cfg.get_long("sac.critic_hidden", s.critic_hidden));
  return s;
}

inline int run_train(const RunConfig& cfg) {
  const std::string out_dir = cfg.get_string("out", "out");
  const auto seed = static_cast<std::uint64_t>(cfg.get_long("seed", 0));
  const FrequencyMode mode =
      frequency_mode_from_name(cfg.get_string("freq-mode", "adaptive-curve"));
  const EnvConfig env_cfg = env_config_from(cfg);
  const SacConfig sac_cfg = sac_config_from(cfg);
  TrainOptions opt;
  opt.total_steps = cfg.get_long("steps", 200000);
  opt.out_dir = out_dir;
  opt.seed = seed;
  opt.workers = static_cast<int>(cfg.get_long("workers", 1));

  write_manifest(cfg, out_dir);
  SacTrainerT<float> trainer(sac_cfg, env_cfg, mode, seed);
  log_info("training " + std::to_string(opt.total_steps) + " steps, mode " +
           frequency_mode_name(mode) + ", seed " + std::to_string(seed));
  const TrainResult result = opt.workers > 1
                                 ? train_multiworker(trainer, env_cfg, opt)
                                 : train(trainer, env_cfg, opt);
  log_info("finished: " + std::to_string(result.episodes.size()) + " episodes, " +
           "final checkpoint " + result.final_checkpoint);
  return kExitOk;
}

template <typename S>
void load_policy_checkpoint(const std::string& path, PolicyT<S>& policy,
                            RunningNormalizer& norm) {
  if (path.empty() || !std::filesystem::exists(path))
    throw UserError("checkpoint not found: " + path);
  policy_from_checkpoint(Checkpoint::load(path), policy, norm);
}

inline int run_rollout(const RunConfig& cfg) {
  const std::string out_dir = cfg.get_string("out", "out");
  PolicyT<double> policy;
  RunningNormalizer norm(FilterState::kObsChannels);
  load_policy_checkpoint(cfg.get_string("checkpoint", ""), policy, norm);
  if (cfg.has("freq-mode"))
    policy.freq_mode = frequency_mode_from_name(cfg.get_string("freq-mode", ""));

  write_manifest(cfg, out_dir);
  const EnvConfig env_cfg = env_config_from(cfg);
  Rng rng(static_cast<std::uint64_t>(cfg.get_long("seed", 0)));
  RolloutOptions opt;
  opt.duration = cfg.get_double("rollout.duration", env_cfg.time_limit);
  opt.mode = cfg.get_long("rollout.stochastic", 0) != 0 ? ActMode::kStochastic
                                                        : ActMode::kDeterministic;
  if (cfg.has("rollout.goal_vx") || cfg.has("rollout.goal_vy") ||
      cfg.has("rollout.goal_wyaw")) {
    Goal g;
    g.vx = cfg.get_double("rollout.goal_vx", 0.0);
    g.vy = cfg.get_double("rollout.goal_vy", 0.0);
    g.wyaw = cfg.get_double("rollout.goal_wyaw", 0.0);
    opt.fixed_goal = g;
  }
  const long episodes = cfg.get_long("rollout.episodes", 1);
  for (long e = 0; e < episodes; ++e) {
    const RolloutResult res = rollout_episode(policy, norm, env_cfg, rng, opt);
    char name[64];
    std::snprintf(name, sizeof(name), "trajectory_%03ld.csv", e);
    res.log.write_csv((std::filesystem::path(out_dir) / name).string());
    log_info("episode " + std::to_string(e) + ": return " +
             std::to_string(res.episode_return) + ", steps " +
             std::to_string(res.log.rows.size()));
  }
  return kExitOk;
}

inline int run_follow(const RunConfig& cfg) {
  const std::string out_dir = cfg.get_string("out", "out");
  PolicyT<double> policy;
  RunningNormalizer norm(FilterState::kObsChannels);
  load_policy_checkpoint(cfg.get_string("checkpoint", ""), policy, norm);

  write_manifest(cfg, out_dir);
  TrajectorySpec spec;
  spec.kind = path_kind_from_name(cfg.get_string("follow.path", "square"));
  spec.scale = cfg.get_double("follow.scale", spec.scale);
  spec.period = cfg.get_double("follow.period", spec.period);
  spec.duration = cfg.get_double("follow.duration", spec.period);
  const EnvConfig env_cfg = env_config_from(cfg);
  Rng rng(static_cast<std::uint64_t>(cfg.get_long("seed", 0)));
  const FollowResult res =
      follow(policy, norm, env_cfg, spec, rng,
             (std::filesystem::path(out_dir) / "follow.csv").string());
  log_info("follow: " + std::to_string(res.steps) + " steps, mean |vx - cmd| " +
           std::to_string(res.mean_speed_error));
  return kExitOk;
}

inline int run_analyze(const RunConfig& cfg) {
  const std::string input = cfg.get_string("analyze.input", "");
  if (input.empty()) throw UserError("analyze.input is required for mode analyze");
  std::vector<std::string> files;
  if (std::filesystem::is_directory(input)) {
    for (const auto& entry : std::filesystem::directory_iterator(input)) {
      if (entry.path().extension() == ".csv" &&
          entry.path().filename().string().rfind("trajectory", 0) == 0)
        files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(input);
  }
  if (files.empty()) throw UserError("no trajectory CSVs found in " + input);

  const std::string out_dir = cfg.get_string("out", "out");
  std::filesystem::create_directories(out_dir);
  write_manifest(cfg, out_dir);
  const int signal_joint = static_cast<int>(cfg.get_long("analyze.signal_joint", 2));

  std::ofstream metrics(std::filesystem::path(out_dir) / "metrics.csv");
  metrics << "# mlpcpg-gait-metrics v1\nfile,v,f,step_length,cot\n";
  std::ofstream fig6b(std::filesystem::path(out_dir) / "fig_cot.csv");
  fig6b << "# mlpcpg-fig v1\nv,cot\n";
  std::ofstream fig6c(std::filesystem::path(out_dir) / "fig_frequency.csv");
  fig6c << "# mlpcpg-fig v1\nv,f\n";
  std::ofstream fig7a(std::filesystem::path(out_dir) / "fig_step_length.csv");
  fig7a << "# mlpcpg-fig v1\nv,step_length\n";
  std::ofstream fig8(std::filesystem::path(out_dir) / "fig_contacts.csv");
  fig8 << "# mlpcpg-fig v1\nfile,time,foot,contact\n";

  char buf[256];
  for (const auto& file : files) {
    const TrajectoryLog log = TrajectoryLog::read_csv(file);
    const GaitMetrics m = analyze_gait(log, signal_joint);
    const std::string name = std::filesystem::path(file).filename().string();
    std::snprintf(buf, sizeof(buf), "%s,%.10g,%.10g,%.10g,%.10g\n", name.c_str(),
                  m.mean_speed, m.mean_frequency, m.step_length,
                  m.cot_valid ? m.cot : std::nan(""));
    metrics << buf;
    if (m.cot_valid) {
      std::snprintf(buf, sizeof(buf), "%.10g,%.10g\n", m.mean_speed, m.cot);
      fig6b << buf;
    }
    for (double f : m.window_frequency) {
      std::snprintf(buf, sizeof(buf), "%.10g,%.10g\n", m.mean_speed, f);
      fig6c << buf;
    }
    if (m.step_length > 0.0) {
      std::snprintf(buf, sizeof(buf), "%.10g,%.10g\n", m.mean_speed, m.step_length);
      fig7a << buf;
    }
    for (const auto& row : log.rows) {
      for (int n = 0; n < kNumLegs; ++n) {
        std::snprintf(buf, sizeof(buf), "%s,%.6g,%d,%d\n", name.c_str(), row.time, n,
                      row.contact[n] ? 1 : 0);
        fig8 << buf;
      }
    }
    log_info("analyzed " + name);
  }
  return kExitOk;
}

}  // namespace detail

/// Entry point shared by the binary and the tests.
inline int run_cli(const RunConfig& cfg) {
  try {
    const std::string mode = cfg.get_string("mode", "");
    if (mode == "train") return detail::run_train(cfg);
    if (mode == "rollout") return detail::run_rollout(cfg);
    if (mode == "follow") return detail::run_follow(cfg);
    if (mode == "analyze") return detail::run_analyze(cfg);
    throw UserError("mode must be one of train|rollout|follow|analyze, got '" +
                    mode + "'");
  } catch (const UserError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUserError;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUserError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime error: %s\n", e.what());
    return kExitRuntime;
  }
}

}  // namespace mlpcpg
