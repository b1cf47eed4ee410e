// slicerl: train, evaluate, plot and sweep slice-allocation agents.
#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "slicerl/config.hpp"
#include "slicerl/report.hpp"
#include "slicerl/trainer.hpp"

namespace fs = std::filesystem;
using namespace slicerl;

namespace {

constexpr int kOk = 0;
constexpr int kConfigFailure = 1;
constexpr int kRuntimeFailure = 2;

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

void configure_logging() {
  const std::string level = env_or("SLICERL_LOG_LEVEL", "info");
  const auto parsed = spdlog::level::from_str(level);
  if (parsed == spdlog::level::off && level != "off")
    throw ConfigError("SLICERL_LOG_LEVEL: unknown level '" + level + "'");
  spdlog::set_level(parsed);
  spdlog::set_pattern("[%H:%M:%S] [%^%l%$] %v");
}

fs::path output_root(const std::string& flag, const RunConfig& config) {
  if (!flag.empty()) return flag;
  return env_or("SLICERL_OUTPUT_DIR", config.output_dir);
}

void train_one(const RunConfig& config, std::uint64_t seed, const fs::path& dir) {
  spdlog::info("training {} seed {} for {} steps into {}", to_string(config.agent.algorithm), seed,
               config.max_timesteps, dir.string());
  Trainer trainer(config, seed, dir);
  trainer.run();
  spdlog::info("final evaluation score {:.6g}", trainer.evaluations().back().score);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-aware network-slice resource allocation with off-policy actor-critic agents"};
  app.require_subcommand(1);

  std::string config_path, out_dir, checkpoint_path, resume_path, kind = "return", seeds_text;
  std::uint64_t seed = 0;
  bool seed_given = false;
  long max_steps = -1;
  int episodes = 5, best = 3, smooth = 1;
  long round = 0;
  std::vector<std::string> runs;

  auto* train = app.add_subcommand("train", "run one seeded training job");
  train->add_option("--config", config_path, "config file")->required()->check(CLI::ExistingFile);
  train->add_option("--seed", seed, "random seed (default: first seed in the config)")
      ->each([&](const std::string&) { seed_given = true; });
  train->add_option("--out", out_dir, "run directory (default: $SLICERL_OUTPUT_DIR or run.output_dir)");
  train->add_option("--max-timesteps", max_steps, "override run.max_timesteps");
  train->add_option("--resume", resume_path, "continue from a checkpoint written by a previous run")
      ->check(CLI::ExistingFile);

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint in deterministic mode");
  eval->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required()->check(CLI::ExistingFile);
  eval->add_option("--episodes", episodes, "episodes per evaluation")->check(CLI::PositiveNumber);
  eval->add_option("--best", best, "number of best episodes averaged")->check(CLI::PositiveNumber);
  eval->add_option("--round", round, "evaluation seed round");

  auto* plot = app.add_subcommand("plot", "draw learning curves or comparisons from run directories");
  plot->add_option("--kind", kind, "return|energy|energy_per_slice|cpu|wallclock");
  plot->add_option("--runs", runs, "run directories")->required()->expected(1, -1);
  plot->add_option("--out", out_dir, "output .svg (a .csv sidecar is written next to it)")->required();
  plot->add_option("--smooth", smooth, "moving-average window")->check(CLI::PositiveNumber);

  auto* sweep = app.add_subcommand("sweep", "train one run per listed seed");
  sweep->add_option("--config", config_path, "config file")->required()->check(CLI::ExistingFile);
  sweep->add_option("--seeds", seeds_text, "comma-separated seeds (default: run.seeds)");
  sweep->add_option("--out", out_dir, "parent directory of the per-seed runs");
  sweep->add_option("--max-timesteps", max_steps, "override run.max_timesteps");

  auto* wallclock = app.add_subcommand("wallclock", "tabulate wall-clock per training window");
  wallclock->add_option("--runs", runs, "run directories")->required()->expected(1, -1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigFailure;
  }

  try {
    configure_logging();

    if (*train) {
      if (!resume_path.empty()) {
        auto trainer = Trainer::resume(resume_path, out_dir.empty() ? fs::path(resume_path).parent_path() : fs::path(out_dir));
        spdlog::info("resuming at step {}", trainer->global_step());
        trainer->run();
        return kOk;
      }
      RunConfig config = load_config(config_path);
      if (max_steps > 0) config.max_timesteps = max_steps;
      config.validate();
      const std::uint64_t s = seed_given ? seed : config.seeds.front();
      train_one(config, s, output_root(out_dir, config));
    } else if (*eval) {
      if (best > episodes) throw ConfigError("--best must not exceed --episodes");
      auto trainer = Trainer::resume(checkpoint_path, fs::path(checkpoint_path).parent_path(), false);
      const EvalResult r = evaluate(trainer->agent(), trainer->config().env, episodes, best, trainer->seed(), round);
      for (std::size_t i = 0; i < r.returns.size(); ++i) std::cout << "episode " << i << " return " << r.returns[i] << "\n";
      std::cout << "score " << r.score << "\n";
    } else if (*plot) {
      PlotKind k;
      try {
        k = plot_kind_from_string(kind);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
      std::vector<fs::path> dirs(runs.begin(), runs.end());
      for (const auto& w : plot_runs(k, dirs, out_dir, smooth)) spdlog::warn("{}", w);
      spdlog::info("wrote {}", out_dir);
    } else if (*sweep) {
      RunConfig config = load_config(config_path);
      if (max_steps > 0) config.max_timesteps = max_steps;
      if (!seeds_text.empty()) config.seeds = parse_seed_list(seeds_text);
      config.validate();
      const fs::path root = output_root(out_dir, config);
      // Runs share nothing but the filesystem; the sandbox has one core, so they run back to back.
      for (auto s : config.seeds)
        train_one(config, s, root / (to_string(config.agent.algorithm) + "_seed" + std::to_string(s)));
    } else if (*wallclock) {
      std::cout << format_wallclock(report_wallclock(std::vector<fs::path>(runs.begin(), runs.end())));
    }
    return kOk;
  } catch (const ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return kConfigFailure;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kRuntimeFailure;
  }
}
