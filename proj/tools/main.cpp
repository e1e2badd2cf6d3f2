#include <CLI11.hpp>

#include "mlpcpg/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"MLP-CPG quadruped locomotion: train, roll out, follow, analyze"};

  std::string config_path, mode, out_dir, checkpoint, freq_mode;
  long seed = -1, steps = -1, workers = -1;
  app.add_option("--config", config_path, "flat dotted-key config file");
  app.add_option("--mode", mode, "train|rollout|follow|analyze");
  app.add_option("--seed", seed, "rng seed");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--checkpoint", checkpoint, "policy checkpoint path");
  app.add_option("--freq-mode", freq_mode,
                 "fixed-1.5|fixed-3.0|adaptive-curve|adaptive-free");
  app.add_option("--workers", workers, "rollout worker threads (train)");
  app.add_option("--steps", steps, "total policy steps (train)");
  CLI11_PARSE(app, argc, argv);

  mlpcpg::RunConfig cfg;
  try {
    if (!config_path.empty()) cfg.load_file(config_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return mlpcpg::kExitUserError;
  }
  if (!mode.empty()) cfg.set("mode", mode);
  if (!out_dir.empty()) cfg.set("out", out_dir);
  if (!checkpoint.empty()) cfg.set("checkpoint", checkpoint);
  if (!freq_mode.empty()) cfg.set("freq-mode", freq_mode);
  if (seed >= 0) cfg.set("seed", std::to_string(seed));
  if (steps >= 0) cfg.set("steps", std::to_string(steps));
  if (workers >= 0) cfg.set("workers", std::to_string(workers));

  return mlpcpg::run_cli(cfg);
}
