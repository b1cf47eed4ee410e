#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "slicerl/agent.hpp"
#include "slicerl/config.hpp"
#include "slicerl/replay_buffer.hpp"
#include "slicerl/sliceenv.hpp"

namespace slicerl {

using Policy = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct EvalResult {
  std::vector<double> returns;
  double score = 0.0;  // mean of the `best` largest returns
};

/// Mean of the `best` largest values.
double best_of_mean(std::vector<double> returns, int best);

/// Seed of the i-th episode of evaluation round `round`; disjoint from the
/// training episode seeds.
std::uint64_t eval_seed(std::uint64_t run_seed, long round, int episode);

/// Runs `episodes` full episodes on a fresh environment, each reset with
/// eval_seed(run_seed, round, i).
EvalResult evaluate(const Policy& policy, const EnvConfig& env, int episodes, int best, std::uint64_t run_seed,
                    long round);
/// Deterministic-mode evaluation of an agent.
EvalResult evaluate(Agent<float>& agent, const EnvConfig& env, int episodes, int best, std::uint64_t run_seed,
                    long round);
/// Uniform-random actions on [-1, 1]^dim, drawn from a stream seeded by `action_seed`.
EvalResult evaluate_random(const EnvConfig& env, int episodes, int best, std::uint64_t run_seed, long round,
                           std::uint64_t action_seed);

/// Sums of per-step quantities over an episode or a logging window.
struct StepStats {
  long steps = 0;
  double reward = 0.0;
  double energy_w = 0.0;
  Eigen::VectorXd slice_energy_w;
  double cpu_utilization = 0.0;
  long sinr_violations = 0;
  long cpu_violations = 0;
  double users = 0.0;
  long updates = 0;
  long actor_updates = 0;
  double critic_loss_1 = 0.0;
  double critic_loss_2 = 0.0;
  double actor_loss = 0.0;
  double alpha_loss = 0.0;
  double mean_q = 0.0;
  double alpha = 0.0;  // last value seen

  explicit StepStats(int n_slices = 0) : slice_energy_w(Eigen::VectorXd::Zero(n_slices)) {}
  void add(const StepOutcome& outcome);
  void add(const Diagnostics& d);
};

struct EvalRecord {
  long step = 0;
  double score = 0.0;
  std::vector<double> returns;
};

/// One seeded training run: Algorithm 1's loop plus evaluation, metrics and
/// checkpoints, all written under `run_dir`.
class Trainer {
 public:
  static constexpr const char* kMetricsFile = "metrics.tsv";
  static constexpr const char* kTimingFile = "timing.tsv";
  static constexpr const char* kTrajectoryFile = "trajectory.tsv";
  static constexpr const char* kCheckpointFile = "checkpoint.slrl";
  static constexpr const char* kConfigFile = "config.ini";

  Trainer(RunConfig config, std::uint64_t seed, std::filesystem::path run_dir);

  /// Restores a trainer saved by save_checkpoint; output continues in `run_dir`.
  /// With `rewrite_outputs` false nothing on disk is touched (inspection only).
  static std::unique_ptr<Trainer> resume(const std::filesystem::path& checkpoint, std::filesystem::path run_dir,
                                         bool rewrite_outputs = true);

  /// Runs to max_timesteps and writes the summary.
  void run();
  /// At most `steps` further environment steps.
  void advance(long steps);
  /// Final evaluation (if the last step was not an evaluation step) and summary row.
  void finish();

  void save_checkpoint(const std::filesystem::path& path) const;

  long global_step() const { return t_; }
  bool done() const { return t_ >= config_.max_timesteps; }
  const RunConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  const std::filesystem::path& run_dir() const { return run_dir_; }
  Agent<float>& agent() { return agent_; }
  ReplayBuffer<float>& buffer() { return buffer_; }
  SliceEnv& env() { return env_; }
  const std::vector<EvalRecord>& evaluations() const { return evals_; }
  const std::vector<double>& window_seconds() const { return window_seconds_; }
  long episodes() const { return episode_; }

 private:
  struct ResumeTag {};
  Trainer(RunConfig config, std::uint64_t seed, std::filesystem::path run_dir, ResumeTag);

  void step_once();
  void run_evaluation();
  void begin_episode();
  void write_metrics_row(const std::string& kind, const StepStats& s, double episode_return, double eval_score);
  void append(const char* file, std::string& mirror, const std::string& line);
  void write_outputs_from_mirror();

  RunConfig config_;
  std::uint64_t seed_;
  std::filesystem::path run_dir_;

  SliceEnv env_;
  Agent<float> agent_;
  ReplayBuffer<float> buffer_;
  Rng rng_;  // warmup actions

  Eigen::VectorXd obs_;
  long t_ = 0;
  long episode_ = 0;
  double episode_return_ = 0.0;
  StepStats episode_stats_;
  StepStats window_stats_;
  StepStats run_stats_;
  double returns_sum_ = 0.0;
  std::vector<EvalRecord> evals_;
  bool finished_ = false;
  bool buffer_notice_ = false;

  std::vector<double> window_seconds_;
  double window_accum_s_ = 0.0;
  int window_fill_ = 0;

  // Text written so far; checkpoints carry it so a resumed run rewrites
  // identical files.
  std::string metrics_text_;
  std::string timing_text_;
  std::uint64_t trajectory_bytes_ = 0;
};

}  // namespace slicerl
