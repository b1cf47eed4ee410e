#include "slicerl/trainer.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace slicerl {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kEvalStream = 0x5eed0e7a1ULL;
constexpr std::uint64_t kEpisodeStream = 1000;
const double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double x) { return fmt::format("{}", x); }

double ratio(double sum, long n) { return n > 0 ? sum / static_cast<double>(n) : kNaN; }

void save_env_state(BinaryWriter& w, const EnvState& s) {
  w.str("envstate");
  w.array(s.arrivals);
  w.array(s.cpu_allocated);
  w.f64(s.energy_status_w);
  w.array(s.users_per_slice);
  w.u64(s.users.size());
  for (const auto& u : s.users) {
    w.i64(u.slice);
    w.array(u.distances);
  }
  w.f64(s.cpu_requirement);
  w.i64(s.step);
  w.i64(s.horizon);
  w.str(s.rng_state);
}

EnvState load_env_state(BinaryReader& r) {
  if (r.str() != "envstate") throw std::runtime_error("checkpoint: expected an environment record");
  EnvState s;
  s.arrivals = r.array<Eigen::VectorXd>();
  s.cpu_allocated = r.array<Eigen::VectorXd>();
  s.energy_status_w = r.f64();
  s.users_per_slice = r.array<Eigen::VectorXd>();
  s.users.resize(r.u64());
  for (auto& u : s.users) {
    u.slice = static_cast<int>(r.i64());
    u.distances = r.array<Eigen::VectorXd>();
  }
  s.cpu_requirement = r.f64();
  s.step = static_cast<int>(r.i64());
  s.horizon = static_cast<int>(r.i64());
  s.rng_state = r.str();
  return s;
}

void save_stats(BinaryWriter& w, const StepStats& s) {
  w.i64(s.steps);
  w.f64(s.reward);
  w.f64(s.energy_w);
  w.array(s.slice_energy_w);
  w.f64(s.cpu_utilization);
  w.i64(s.sinr_violations);
  w.i64(s.cpu_violations);
  w.f64(s.users);
  w.i64(s.updates);
  w.i64(s.actor_updates);
  w.f64(s.critic_loss_1);
  w.f64(s.critic_loss_2);
  w.f64(s.actor_loss);
  w.f64(s.alpha_loss);
  w.f64(s.mean_q);
  w.f64(s.alpha);
}

StepStats load_stats(BinaryReader& r) {
  StepStats s;
  s.steps = r.i64();
  s.reward = r.f64();
  s.energy_w = r.f64();
  s.slice_energy_w = r.array<Eigen::VectorXd>();
  s.cpu_utilization = r.f64();
  s.sinr_violations = r.i64();
  s.cpu_violations = r.i64();
  s.users = r.f64();
  s.updates = r.i64();
  s.actor_updates = r.i64();
  s.critic_loss_1 = r.f64();
  s.critic_loss_2 = r.f64();
  s.actor_loss = r.f64();
  s.alpha_loss = r.f64();
  s.mean_q = r.f64();
  s.alpha = r.f64();
  return s;
}

std::string metrics_header(const RunConfig& c, std::uint64_t seed) {
  std::string h = fmt::format("# slicerl-metrics v1 algorithm={} profile={} seed={}\n", to_string(c.agent.algorithm),
                              to_string(c.profile), seed);
  h += "kind\tstep\tepisode\treturn\tmean_reward\tenergy_w";
  for (const auto& s : c.env.slices) h += "\tenergy_" + s.id + "_w";
  h += "\tcpu_utilization\tsinr_violations\tcpu_violations\tmean_users\tupdates\tcritic_loss_1\tcritic_loss_2"
       "\tactor_loss\talpha_loss\talpha\tmean_q\teval_score\n";
  return h;
}

std::string timing_header(const RunConfig& c, std::uint64_t seed) {
  return fmt::format("# slicerl-timing v1 algorithm={} seed={} window_steps={}\nwindow\tend_step\tseconds\n",
                     to_string(c.agent.algorithm), seed, c.wallclock_window);
}

}  // namespace

double best_of_mean(std::vector<double> returns, int best) {
  if (returns.empty()) throw std::invalid_argument("best_of_mean: no returns");
  if (best < 1 || static_cast<std::size_t>(best) > returns.size())
    throw std::invalid_argument("best_of_mean: best must lie in [1, episodes]");
  std::sort(returns.begin(), returns.end(), std::greater<>());
  return std::accumulate(returns.begin(), returns.begin() + best, 0.0) / best;
}

std::uint64_t eval_seed(std::uint64_t run_seed, long round, int episode) {
  return mix_seed(run_seed ^ kEvalStream, static_cast<std::uint64_t>(round) * 1024 + static_cast<std::uint64_t>(episode));
}

EvalResult evaluate(const Policy& policy, const EnvConfig& env_config, int episodes, int best, std::uint64_t run_seed,
                    long round) {
  SliceEnv env(env_config);
  EvalResult r;
  for (int i = 0; i < episodes; ++i) {
    Eigen::VectorXd obs = env.reset(eval_seed(run_seed, round, i));
    double total = 0.0;
    for (;;) {
      const StepOutcome out = env.step(policy(obs));
      total += out.reward;
      obs = out.observation;
      if (out.done) break;
    }
    r.returns.push_back(total);
  }
  r.score = best_of_mean(r.returns, best);
  return r;
}

EvalResult evaluate(Agent<float>& agent, const EnvConfig& env, int episodes, int best, std::uint64_t run_seed,
                    long round) {
  return evaluate([&agent](const Eigen::VectorXd& s) { return agent.select_action(s, ActionMode::eval); }, env,
                  episodes, best, run_seed, round);
}

EvalResult evaluate_random(const EnvConfig& env, int episodes, int best, std::uint64_t run_seed, long round,
                           std::uint64_t action_seed) {
  Rng rng(action_seed);
  const int dim = env.action_dim();
  return evaluate(
      [&rng, dim](const Eigen::VectorXd&) {
        Eigen::VectorXd a(dim);
        for (int i = 0; i < dim; ++i) a(i) = rng.uniform(-1.0, 1.0);
        return a;
      },
      env, episodes, best, run_seed, round);
}

void StepStats::add(const StepOutcome& o) {
  ++steps;
  reward += o.reward;
  energy_w += o.info.cost.total_w;
  if (slice_energy_w.size() != o.info.energy_per_slice.size()) slice_energy_w = Eigen::VectorXd::Zero(o.info.energy_per_slice.size());
  slice_energy_w += o.info.energy_per_slice;
  cpu_utilization += o.info.cpu_utilization;
  sinr_violations += o.info.violations.sinr_count();
  cpu_violations += o.info.violations.cpu_count();
  users += o.info.n_users;
}

void StepStats::add(const Diagnostics& d) {
  if (!d.updated) return;
  ++updates;
  critic_loss_1 += d.critic_loss_1;
  critic_loss_2 += d.critic_loss_2;
  mean_q += d.mean_q;
  alpha = d.alpha;
  if (d.actor_updated) {
    ++actor_updates;
    actor_loss += d.actor_loss;
    alpha_loss += d.alpha_loss;
  }
}

Trainer::Trainer(RunConfig config, std::uint64_t seed, fs::path run_dir, ResumeTag)
    : config_(std::move(config)),
      seed_(seed),
      run_dir_(std::move(run_dir)),
      env_(config_.env),
      agent_(config_.agent, config_.env.obs_dim(), config_.env.action_dim(), mix_seed(seed, 1)),
      buffer_(config_.env.obs_dim(), config_.env.action_dim(), config_.buffer_capacity, mix_seed(seed, 2)),
      rng_(mix_seed(seed, 3)),
      episode_stats_(config_.env.n_slices()),
      window_stats_(config_.env.n_slices()),
      run_stats_(config_.env.n_slices()) {
  config_.validate();
  std::error_code ec;
  fs::create_directories(run_dir_, ec);
  if (ec || !fs::is_directory(run_dir_))
    throw ConfigError("cannot create output directory " + run_dir_.string() + ": " + ec.message());
  const fs::path probe = run_dir_ / ".write_probe";
  if (!std::ofstream(probe)) throw ConfigError("output directory " + run_dir_.string() + " is not writable");
  fs::remove(probe, ec);
}

Trainer::Trainer(RunConfig config, std::uint64_t seed, fs::path run_dir)
    : Trainer(std::move(config), seed, std::move(run_dir), ResumeTag{}) {
  metrics_text_ = metrics_header(config_, seed_);
  timing_text_ = timing_header(config_, seed_);
  write_outputs_from_mirror();
  std::ofstream(run_dir_ / kConfigFile, std::ios::trunc) << to_ini(config_);
  if (config_.dump_trajectory) {
    std::ofstream traj(run_dir_ / kTrajectoryFile, std::ios::trunc);
    const std::string header = "step\tepisode\treward\tallocation_cores\tdemand_cores\tn_users\tenergy_w\tsinr_violations\tcpu_violations\n";
    traj << header;
    trajectory_bytes_ = header.size();
  }
  begin_episode();
}

void Trainer::write_outputs_from_mirror() {
  std::ofstream(run_dir_ / kMetricsFile, std::ios::trunc | std::ios::binary) << metrics_text_;
  std::ofstream(run_dir_ / kTimingFile, std::ios::trunc | std::ios::binary) << timing_text_;
}

void Trainer::append(const char* file, std::string& mirror, const std::string& line) {
  mirror += line;
  std::ofstream os(run_dir_ / file, std::ios::app | std::ios::binary);
  os << line;
  if (!os) throw std::runtime_error(std::string("failed writing ") + (run_dir_ / file).string());
}

void Trainer::begin_episode() {
  obs_ = env_.reset(mix_seed(seed_, kEpisodeStream + static_cast<std::uint64_t>(episode_)));
  agent_.on_episode_start();
  episode_return_ = 0.0;
  episode_stats_ = StepStats(config_.env.n_slices());
}

void Trainer::write_metrics_row(const std::string& kind, const StepStats& s, double episode_return, double eval_score) {
  std::string row = fmt::format("{}\t{}\t{}\t{}\t{}\t{}", kind, t_, episode_, num(episode_return), num(ratio(s.reward, s.steps)),
                                num(ratio(s.energy_w, s.steps)));
  for (Eigen::Index i = 0; i < config_.env.n_slices(); ++i)
    row += "\t" + num(i < s.slice_energy_w.size() ? ratio(s.slice_energy_w(i), s.steps) : kNaN);
  row += fmt::format("\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n", num(ratio(s.cpu_utilization, s.steps)),
                     s.sinr_violations, s.cpu_violations, num(ratio(s.users, s.steps)), s.updates,
                     num(ratio(s.critic_loss_1, s.updates)), num(ratio(s.critic_loss_2, s.updates)),
                     num(ratio(s.actor_loss, s.actor_updates)), num(ratio(s.alpha_loss, s.actor_updates)),
                     num(s.updates > 0 ? s.alpha : agent_.alpha()), num(ratio(s.mean_q, s.updates)), num(eval_score));
  append(kMetricsFile, metrics_text_, row);
}

void Trainer::step_once() {
  using clock = std::chrono::steady_clock;
  const bool warmup = t_ < config_.start_timesteps;
  const auto t0 = clock::now();

  Eigen::VectorXd action;
  if (warmup) {
    action.resize(env_.action_dim());
    for (Eigen::Index i = 0; i < action.size(); ++i) action(i) = rng_.uniform(-1.0, 1.0);
  } else {
    action = agent_.select_action(obs_, ActionMode::explore);
  }
  const StepOutcome out = env_.step(action);
  // Horizon ends are truncations, so the stored transition still bootstraps.
  buffer_.add(obs_, action, out.reward, out.observation, out.done && !out.truncated);

  Diagnostics diag;
  if (!warmup) {
    diag = agent_.train_step(buffer_);
    if (!diag.updated && !buffer_notice_) {
      spdlog::info("replay buffer holds {} < batch {} transitions; skipping updates", buffer_.size(),
                   config_.agent.batch_size);
      buffer_notice_ = true;
    }
    window_accum_s_ += std::chrono::duration<double>(clock::now() - t0).count();
    if (++window_fill_ == config_.wallclock_window) {
      window_seconds_.push_back(window_accum_s_);
      append(kTimingFile, timing_text_,
             fmt::format("{}\t{}\t{}\n", window_seconds_.size() - 1, t_ + 1, num(window_accum_s_)));
      window_accum_s_ = 0.0;
      window_fill_ = 0;
    }
  }

  obs_ = out.observation;
  episode_return_ += out.reward;
  for (StepStats* s : {&episode_stats_, &window_stats_, &run_stats_}) {
    s->add(out);
    s->add(diag);
  }

  if (config_.dump_trajectory) {
    const std::string line = fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n", t_, episode_, num(out.reward),
                                         num(out.info.allocation_cores), num(out.info.demand_cores), out.info.n_users,
                                         num(out.info.cost.total_w), out.info.violations.sinr_count(),
                                         out.info.violations.cpu_count());
    std::ofstream(run_dir_ / kTrajectoryFile, std::ios::app | std::ios::binary) << line;
    trajectory_bytes_ += line.size();
  }

  ++t_;
  if (out.done) {
    ++episode_;
    returns_sum_ += episode_return_;
    write_metrics_row("episode", episode_stats_, episode_return_, kNaN);
    spdlog::debug("step {} episode {} return {:.6g}", t_, episode_, episode_return_);
    begin_episode();
  }
  if (t_ % config_.log_interval == 0) {
    write_metrics_row("window", window_stats_, kNaN, kNaN);
    window_stats_ = StepStats(config_.env.n_slices());
  }
  if (t_ % config_.eval_interval == 0) {
    run_evaluation();
    save_checkpoint(run_dir_ / kCheckpointFile);
  }
}

void Trainer::run_evaluation() {
  // Same held-out episodes every round, so the curve tracks the policy, not the traffic draw.
  const EvalResult r = evaluate(agent_, config_.env, config_.eval_episodes, config_.eval_best, seed_, 0);
  evals_.push_back({t_, r.score, r.returns});
  write_metrics_row("eval", StepStats(config_.env.n_slices()), kNaN, r.score);
  spdlog::info("[{} seed {}] step {} eval score {:.6g} alpha {:.4g}", to_string(config_.agent.algorithm), seed_, t_,
               r.score, agent_.alpha());
}

void Trainer::advance(long steps) {
  for (long i = 0; i < steps && !done(); ++i) step_once();
}

void Trainer::run() {
  advance(config_.max_timesteps - t_);
  finish();
}

void Trainer::finish() {
  if (finished_) return;
  if (evals_.empty() || evals_.back().step != t_) run_evaluation();
  finished_ = true;
  write_metrics_row("summary", run_stats_, ratio(returns_sum_, episode_), evals_.back().score);
  save_checkpoint(run_dir_ / kCheckpointFile);
}

void Trainer::save_checkpoint(const fs::path& path) const {
  BinaryWriter w;
  w.str("trainer");
  w.str(to_ini(config_));
  w.u64(seed_);
  w.i64(t_);
  w.i64(episode_);
  w.f64(episode_return_);
  w.f64(returns_sum_);
  save_stats(w, episode_stats_);
  save_stats(w, window_stats_);
  save_stats(w, run_stats_);
  w.u64(evals_.size());
  for (const auto& e : evals_) {
    w.i64(e.step);
    w.f64(e.score);
    w.array(Eigen::Map<const Eigen::VectorXd>(e.returns.data(), static_cast<Eigen::Index>(e.returns.size())));
  }
  w.u8(finished_ ? 1 : 0);
  w.u8(buffer_notice_ ? 1 : 0);
  w.array(Eigen::Map<const Eigen::VectorXd>(window_seconds_.data(), static_cast<Eigen::Index>(window_seconds_.size())));
  w.f64(window_accum_s_);
  w.i64(window_fill_);
  w.str(metrics_text_);
  w.str(timing_text_);
  w.u64(trajectory_bytes_);
  w.array(obs_);
  save_env_state(w, env_.state());
  w.str(rng_.save());
  agent_.save(w);
  buffer_.save(w, config_.checkpoint_buffer);
  write_container(path, w.bytes());
}

std::unique_ptr<Trainer> Trainer::resume(const fs::path& checkpoint, fs::path run_dir, bool rewrite_outputs) {
  const std::string payload = read_container(checkpoint);
  BinaryReader r(payload);
  if (r.str() != "trainer") throw std::runtime_error(checkpoint.string() + ": not a trainer checkpoint");
  RunConfig config = parse_config(r.str());
  const auto seed = r.u64();
  std::unique_ptr<Trainer> tr(new Trainer(std::move(config), seed, std::move(run_dir), ResumeTag{}));
  tr->t_ = r.i64();
  tr->episode_ = r.i64();
  tr->episode_return_ = r.f64();
  tr->returns_sum_ = r.f64();
  tr->episode_stats_ = load_stats(r);
  tr->window_stats_ = load_stats(r);
  tr->run_stats_ = load_stats(r);
  tr->evals_.resize(r.u64());
  for (auto& e : tr->evals_) {
    e.step = r.i64();
    e.score = r.f64();
    const auto v = r.array<Eigen::VectorXd>();
    e.returns.assign(v.data(), v.data() + v.size());
  }
  tr->finished_ = r.u8() != 0;
  tr->buffer_notice_ = r.u8() != 0;
  const auto ws = r.array<Eigen::VectorXd>();
  tr->window_seconds_.assign(ws.data(), ws.data() + ws.size());
  tr->window_accum_s_ = r.f64();
  tr->window_fill_ = static_cast<int>(r.i64());
  tr->metrics_text_ = r.str();
  tr->timing_text_ = r.str();
  tr->trajectory_bytes_ = r.u64();
  tr->obs_ = r.array<Eigen::VectorXd>();
  tr->env_.restore(load_env_state(r));
  tr->rng_.load(r.str());
  tr->agent_.load(r);
  tr->buffer_ = ReplayBuffer<float>::load(r);
  if (!r.done()) throw std::runtime_error(checkpoint.string() + ": trailing bytes in checkpoint");
  if (!rewrite_outputs) return tr;

  tr->write_outputs_from_mirror();
  std::ofstream(tr->run_dir_ / kConfigFile, std::ios::trunc) << to_ini(tr->config_);
  if (tr->config_.dump_trajectory) {
    const fs::path traj = tr->run_dir_ / kTrajectoryFile;
    if (fs::exists(traj) && fs::file_size(traj) >= tr->trajectory_bytes_) {
      fs::resize_file(traj, tr->trajectory_bytes_);
    } else {
      spdlog::warn("trajectory file missing or short; resumed trajectory starts at step {}", tr->t_);
      std::ofstream(traj, std::ios::trunc);
      tr->trajectory_bytes_ = 0;
    }
  }
  return tr;
}

}  // namespace slicerl
