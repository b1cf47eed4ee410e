// Acceptance runner: one PASS/FAIL line per criterion, plus the numbers behind it.
// Usage: acceptance --work DIR [--only 1,4]
#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracle.hpp"
#include "slicerl/costmodel.hpp"
#include "slicerl/netmodel.hpp"
#include "slicerl/report.hpp"
#include "slicerl/trainer.hpp"

using namespace slicerl;
namespace fs = std::filesystem;
using Md = Eigen::MatrixXd;
using RowD = Eigen::RowVectorXd;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      notes.push_back("FAILED: " + what);
    }
  }
  void note(const std::string& s) { notes.push_back(s); }
};

template <typename... Args>
std::string fmtd(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

double mean(const std::vector<double>& v) {
  return v.empty() ? std::nan("") : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// ---------------------------------------------------------------- 1

double weighted_output(const Mlp<double>& net, const Md& x, const Md& w) { return net.forward(x).cwiseProduct(w).sum(); }

double rel_norm_err(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double scale = std::max(a.norm(), b.norm());
  return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

Outcome gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  Rng rng(20240601);
  double worst = 0.0;
  int relu = 0, gelu = 0;
  for (int f = 0; f < 50; ++f) {
    const int layers = 1 + static_cast<int>(rng.index(3));
    std::vector<int> sizes;
    for (int l = 0; l <= layers; ++l) sizes.push_back(1 + static_cast<int>(rng.index(8)));
    const Activation act = f % 2 ? Activation::gelu : Activation::relu;
    (f % 2 ? gelu : relu) += 1;
    Mlp<double> net(sizes, act);
    net.initialize(rng);
    for (auto& p : net.params()) p += rng.normal(0.0, 0.1);  // non-zero biases

    Md x(sizes.front(), 4), w(sizes.back(), 4);
    for (auto& v : x.reshaped()) v = rng.normal(0.0, 1.0);
    for (auto& v : w.reshaped()) v = rng.normal(0.0, 1.0);
    Mlp<double>::Tape tape;
    net.forward(x, tape);
    const auto g = net.backward(tape, w);

    const double h = 1e-6;
    Eigen::VectorXd fd_p(net.n_params()), fd_x(x.size());
    for (Eigen::Index k = 0; k < net.n_params(); ++k) {
      Mlp<double> p = net, m = net;
      p.params()(k) += h;
      m.params()(k) -= h;
      fd_p(k) = (weighted_output(p, x, w) - weighted_output(m, x, w)) / (2 * h);
    }
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      Md xp = x, xm = x;
      xp(i) += h;
      xm(i) -= h;
      fd_x(i) = (weighted_output(net, xp, w) - weighted_output(net, xm, w)) / (2 * h);
    }
    const Eigen::VectorXd gx = g.input.reshaped();
    worst = std::max({worst, rel_norm_err(g.params, fd_p), rel_norm_err(gx, fd_x)});
  }
  const double secs = seconds_since(t0);
  o.note(fmtd("50 fixtures (%d relu, %d gelu), max relative error %.3g, %.2f s", relu, gelu, worst, secs));
  o.require(worst < 1e-5, "relative error below 1e-5");
  o.require(secs < 10.0, "runtime below 10 s");
  return o;
}

// ---------------------------------------------------------------- 2

Outcome oracle_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  const ComputeModel c;
  double worst = 0.0;
  int fixtures = 0;
  for (int n = 1; n <= 3; ++n)
    for (int m = 1; m <= 3; ++m)
      for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto f = oracle::make_fixture(seed * 16 + static_cast<std::uint64_t>(n * 4 + m), n, m);
        const double reg = f.topology.regularization();
        const double noise = f.topology.noise_watts();
        const auto beams = beamform(f.channel.gains, f.powers, reg);
        const Eigen::VectorXd s = sinr_all(f.channel.gains, beams, noise);

        const auto h = oracle::from_eigen(f.channel.gains);
        std::vector<long double> p(f.powers.data(), f.powers.data() + m);
        const auto v = oracle::beams(h, p, reg);
        Eigen::VectorXd cores(m);
        std::vector<long double> want_cores;
        for (int u = 0; u < m; ++u) {
          const auto uu = static_cast<std::size_t>(u);
          const long double want_sinr = oracle::sinr(h, v, noise, uu);
          const long double want_rate = oracle::rate(want_sinr);
          want_cores.push_back(oracle::cpu_fraction(want_rate, v, uu, c));
          const double r = rate(s(u));
          cores(u) = cpu_fraction(r, beams.vectors.col(u), c);
          worst = std::max({worst, oracle::rel_err(s(u), want_sinr), oracle::rel_err(r, want_rate),
                            oracle::rel_err(cores(u), want_cores.back())});
        }
        worst = std::max(worst, oracle::rel_err(network_energy(beams, cores, c).total_w, oracle::total_energy(v, want_cores, c)));
        ++fixtures;
      }
  const double secs = seconds_since(t0);
  o.note(fmtd("%d fixtures over N,M in 1..3, max relative error %.3g, %.2f s", fixtures, worst, secs));
  o.require(worst < 1e-10, "relative error below 1e-10");
  o.require(secs < 5.0, "runtime below 5 s");
  return o;
}

// ---------------------------------------------------------------- 3

Batch<double> one_transition(double reward) {
  return {Md::Constant(3, 1, 0.1), Md::Constant(2, 1, 0.2), RowD::Constant(1, reward), Md::Constant(3, 1, -0.3),
          RowD::Zero(1)};
}

Outcome invariants() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  using fixtures::small_config;

  bool ok = true;
  for (auto algo : {Algorithm::td3, Algorithm::tdsac, Algorithm::sac}) {
    Agent<double> ag(small_config(algo), 3, 2, 2);
    ag.log_alpha()(0) = -200.0;
    fixtures::make_constant(ag.critic_target(0), 2.0);
    fixtures::make_constant(ag.critic_target(1), -1.0);
    ok &= std::abs(ag.compute_target(one_transition(0.25))(0) - (0.25 - 0.99)) < 1e-9;
    fixtures::make_constant(ag.critic_target(0), -3.0);
    ok &= std::abs(ag.compute_target(one_transition(0.25))(0) - (0.25 - 3 * 0.99)) < 1e-9;
  }
  o.require(ok, "min-of-two targets");

  ok = true;
  for (double tau : {0.0, 0.5, 1.0}) {
    Agent<double> ag(small_config(Algorithm::tdsac), 3, 2, 5);
    Rng rng(7);
    for (int i = 0; i < 2; ++i) ag.critic(i).initialize(rng);
    ag.actor().initialize(rng);
    std::vector<Eigen::VectorXd> online, target;
    for (int i = 0; i < 2; ++i) {
      online.push_back(ag.critic(i).params());
      target.push_back(ag.critic_target(i).params());
    }
    ag.polyak_update(tau);
    for (int i = 0; i < 2; ++i) {
      const Eigen::VectorXd want = tau * online[i] + (1 - tau) * target[i];
      ok &= (ag.critic_target(i).params().array() == want.array()).all();
      ok &= (ag.critic(i).params().array() == online[i].array()).all();
    }
  }
  o.require(ok, "Polyak exactness for tau in {0, 0.5, 1}");

  ok = true;
  for (auto algo : {Algorithm::td3, Algorithm::tdsac})
    for (int n = 1; n <= 9; ++n) {
      Agent<double> ag(small_config(algo), 3, 2, 6);
      auto buffer = fixtures::random_buffer<double>(3, 2, 64, 1);
      for (int k = 0; k < n; ++k) ag.train_step(buffer);
      ok &= ag.critic_updates() == n && ag.actor_updates() == n / 2 && ag.target_updates() == n / 2;
    }
  o.require(ok, "floor(n/2) delayed updates");

  {
    Agent<double> up(small_config(Algorithm::tdsac), 3, 2, 8), down(small_config(Algorithm::tdsac), 3, 2, 8);
    const double target = up.target_entropy(), a0 = up.alpha();
    up.temperature_update(RowD::Constant(8, -(target - 1.0)));
    down.temperature_update(RowD::Constant(8, -(target + 1.0)));
    bool positive = true;
    for (int k = 0; k < 5000; ++k) {
      down.temperature_update(RowD::Constant(8, -(target + 1.0)));
      positive &= down.alpha() > 0.0 && std::isfinite(down.alpha());
    }
    o.require(up.alpha() > a0 && down.alpha() < a0, "temperature moves toward the entropy target");
    o.require(positive, "temperature stays positive");
  }

  {
    ReplayBuffer<double> b(1, 1, 3, 0);
    for (int k = 0; k < 5; ++k) b.add(Eigen::VectorXd::Constant(1, k), Eigen::VectorXd::Zero(1), k, Eigen::VectorXd::Zero(1), false);
    o.require(b.size() == 3 && b.at(0).reward == 2.0 && b.at(2).reward == 4.0, "replay FIFO eviction");

    const int n = 20, draws = 40000;
    ReplayBuffer<double> u(1, 1, n, 13);
    for (int k = 0; k < n; ++k) u.add(Eigen::VectorXd::Constant(1, k), Eigen::VectorXd::Zero(1), k, Eigen::VectorXd::Zero(1), false);
    std::map<double, int> counts;
    for (int k = 0; k < draws / 100; ++k) {
      const auto batch = u.sample(100);
      for (Eigen::Index j = 0; j < batch.size(); ++j) counts[batch.rewards(j)] += 1;
    }
    double chi2 = 0.0;
    const double expected = static_cast<double>(draws) / n;
    for (const auto& [k, c] : counts) chi2 += (c - expected) * (c - expected) / expected;
    o.note(fmtd("chi-square %.2f (1%% critical value 36.19, 19 df)", chi2));
    o.require(counts.size() == static_cast<std::size_t>(n) && chi2 < 36.19, "uniform sampling chi-square");
  }

  {
    SliceEnv env(EnvConfig::desk());
    const double cap = env.config().cpu_capacity(), pmax = env.config().radio.p_max_watts;
    Rng rng(99);
    std::uint64_t episode = 0;
    env.reset(episode);
    double rmin = 1e9, rmax = -1e9, amax = 0.0, pmin = 1e9, pmx = 0.0;
    bool bounded = true;
    for (long t = 0; t < 100000; ++t) {
      Eigen::VectorXd a(env.action_dim());
      for (auto& x : a) x = rng.uniform(-1.0, 1.0);
      const auto out = env.step(a);
      rmin = std::min(rmin, out.reward);
      rmax = std::max(rmax, out.reward);
      amax = std::max(amax, out.info.allocation_cores);
      pmin = std::min(pmin, out.info.slice_power.minCoeff());
      pmx = std::max(pmx, out.info.slice_power.maxCoeff());
      bounded &= out.info.allocation_cores >= 0.0 && out.info.allocation_cores <= cap;
      bounded &= out.info.slice_power.minCoeff() >= 0.0 && out.info.slice_power.maxCoeff() <= pmax;
      if (out.done) env.reset(++episode);
    }
    o.note(fmtd("1e5 fuzzed steps: reward in [%.4f, %.4f], allocation <= %.3f of %.0f cores, power in [%.3f, %.3f] W",
                rmin, rmax, amax, cap, pmin, pmx));
    o.require(rmin >= -1.0 && rmax <= 1.0, "reward in [-1, 1]");
    o.require(bounded, "allocation and power within bounds");
  }

  const double secs = seconds_since(t0);
  o.note(fmtd("%.2f s", secs));
  o.require(secs < 60.0, "runtime below 60 s");
  return o;
}

// ---------------------------------------------------------------- 4 and 5

const std::vector<std::uint64_t> kSeeds = {1, 2, 3};

struct RunResult {
  Algorithm algo;
  std::uint64_t seed;
  fs::path dir;
  std::vector<EvalRecord> evals;
  double random_score = 0.0;
  bool finite = true;
  std::vector<double> alphas;  // logged per window, entropy methods
  double seconds = 0.0;
};

bool agent_finite(Agent<float>& a) {
  bool ok = a.actor().params().allFinite() && a.actor_target().params().allFinite() && std::isfinite(a.alpha());
  for (int i = 0; i < a.config().n_critics(); ++i)
    ok &= a.critic(i).params().allFinite() && a.critic_target(i).params().allFinite();
  return ok;
}

RunResult train_desk(Algorithm algo, std::uint64_t seed, const fs::path& work, long steps) {
  RunConfig c = RunConfig::defaults(Profile::desk, algo);
  if (steps > 0) c.max_timesteps = steps;
  RunResult r{algo, seed, work / (to_string(algo) + "_seed" + std::to_string(seed)), {}, 0.0, true, {}, 0.0};
  fs::remove_all(r.dir);
  const auto t0 = std::chrono::steady_clock::now();
  Trainer tr(c, seed, r.dir);
  tr.run();
  r.seconds = seconds_since(t0);
  r.evals = tr.evaluations();
  r.finite = agent_finite(tr.agent());
  for (const auto& e : r.evals) r.finite &= std::isfinite(e.score);
  if (algo == Algorithm::tdsac || algo == Algorithm::sac)
    r.alphas = read_metrics(r.dir / Trainer::kMetricsFile).values("window", "alpha");
  r.random_score = evaluate_random(c.env, c.eval_episodes, c.eval_best, seed, 0, seed).score;
  std::printf("  trained %s seed %llu in %.0f s, final eval %.3f\n", to_string(algo).c_str(),
              static_cast<unsigned long long>(seed), r.seconds, r.evals.back().score);
  std::fflush(stdout);
  return r;
}

std::map<Algorithm, std::vector<RunResult>> g_runs;

const std::vector<RunResult>& runs_of(Algorithm algo, const fs::path& work, long steps) {
  auto& v = g_runs[algo];
  if (v.empty())
    for (auto s : kSeeds) v.push_back(train_desk(algo, s, work, steps));
  return v;
}

Outcome desk_learning(const fs::path& work, long steps) {
  Outcome o;
  const auto& runs = runs_of(Algorithm::tdsac, work, steps);
  std::vector<double> scores, randoms;
  int improving = 0;
  for (const auto& r : runs) {
    const std::size_t k = r.evals.size() / 3;
    std::vector<double> first, last;
    for (std::size_t i = 0; i < k; ++i) {
      first.push_back(r.evals[i].score);
      last.push_back(r.evals[r.evals.size() - k + i].score);
    }
    const bool up = mean(last) > mean(first);
    improving += up;
    scores.push_back(r.evals.back().score);
    randoms.push_back(r.random_score);
    o.note(fmtd("seed %llu: final score %.3f, random %.3f, first third %.3f, final third %.3f%s",
                static_cast<unsigned long long>(r.seed), r.evals.back().score, r.random_score, mean(first), mean(last),
                up ? "" : " (not improving)"));
  }
  const double s = mean(scores), b = mean(randoms);
  const double lift = (s - b) / std::abs(b);
  o.note(fmtd("mean score %.3f vs random %.3f: %+.1f%%; %d of 3 seeds improving", s, b, 100 * lift, improving));
  o.require(lift >= 0.2, "score at least 20% above random");
  o.require(improving >= 2, "final third above first third for >= 2 seeds");
  return o;
}

Outcome variant_parity(const fs::path& work, long steps) {
  Outcome o;
  std::vector<fs::path> dirs;
  std::vector<std::pair<double, std::string>> order;
  for (auto algo : {Algorithm::tdsac, Algorithm::sac, Algorithm::td3, Algorithm::ddpg}) {
    std::vector<double> finals;
    for (const auto& r : runs_of(algo, work, steps)) {
      dirs.push_back(r.dir);
      finals.push_back(r.evals.back().score);
      o.require(r.finite, to_string(algo) + " seed " + std::to_string(r.seed) + " has finite parameters and scores");
      for (double a : r.alphas)
        if (!(a >= 1e-4 && a <= 10.0)) {
          o.require(false, fmtd("%s seed %llu alpha %.3g within [1e-4, 10]", to_string(algo).c_str(),
                                static_cast<unsigned long long>(r.seed), a));
          break;
        }
      if (!r.alphas.empty())
        o.note(fmtd("%s seed %llu alpha range [%.3g, %.3g]", to_string(algo).c_str(), static_cast<unsigned long long>(r.seed),
                    *std::min_element(r.alphas.begin(), r.alphas.end()), *std::max_element(r.alphas.begin(), r.alphas.end())));
    }
    order.push_back({mean(finals), to_string(algo)});
  }

  const auto rows = report_wallclock(dirs, 100);
  const WallclockRow* ddpg = nullptr;
  double others = 1e300;
  for (const auto& r : rows) {
    o.note(fmtd("wall-clock %s: %.4f s per 50 steps (std %.4f over %d runs)", r.algorithm.c_str(), r.mean_s, r.std_s, r.runs));
    if (r.algorithm == "ddpg")
      ddpg = &r;
    else
      others = std::min(others, r.mean_s);
  }
  o.require(ddpg && ddpg->mean_s < others, "ddpg has the lowest wall-clock per window");

  std::sort(order.begin(), order.end(), std::greater<>());
  std::string s = "return order (mean final score):";
  for (const auto& [score, name] : order) s += fmtd(" %s %.3f", name.c_str(), score);
  o.note(s);
  return o;
}

// ---------------------------------------------------------------- 6

RunConfig short_desk(long steps) {
  RunConfig c = RunConfig::defaults(Profile::desk, Algorithm::tdsac);
  c.max_timesteps = steps;
  c.start_timesteps = 1000;
  c.eval_interval = 500;
  c.log_interval = 100;
  return c;
}

Outcome determinism(const fs::path& work) {
  Outcome o;
  const RunConfig c = short_desk(2000);
  for (const char* d : {"det_a", "det_b", "resume_whole", "resume_part", "resume_rest"}) fs::remove_all(work / d);

  Trainer a(c, 42, work / "det_a"), b(c, 42, work / "det_b");
  a.run();
  b.run();
  const std::string ma = slurp(a.run_dir() / Trainer::kMetricsFile);
  o.note(fmtd("same-seed metrics files: %zu bytes each", ma.size()));
  o.require(ma == slurp(b.run_dir() / Trainer::kMetricsFile), "identical seed gives bit-identical metrics");

  const long k = 1700, post = 100;
  Trainer whole(short_desk(k + post), 43, work / "resume_whole");
  whole.advance(k);
  const fs::path ckpt = work / "resume.slrl";
  {
    Trainer part(short_desk(k + post), 43, work / "resume_part");
    part.advance(k);
    part.save_checkpoint(ckpt);
  }
  auto resumed = Trainer::resume(ckpt, work / "resume_rest");
  bool same = resumed->global_step() == k;
  for (long i = 0; i < post && same; ++i) {
    whole.advance(1);
    resumed->advance(1);
    same &= fixtures::agent_bytes(whole.agent()) == fixtures::agent_bytes(resumed->agent());
    same &= (whole.env().state().step == resumed->env().state().step);
  }
  same &= fixtures::buffer_bytes(whole.buffer()) == fixtures::buffer_bytes(resumed->buffer());
  whole.finish();
  resumed->finish();
  same &= slurp(whole.run_dir() / Trainer::kMetricsFile) == slurp(resumed->run_dir() / Trainer::kMetricsFile);
  o.note(fmtd("resume at step %ld, compared agent state after each of %ld steps", k, post));
  o.require(same, "resumed run equals the uninterrupted run");
  return o;
}

// ---------------------------------------------------------------- 7

Outcome protocol(const fs::path& work) {
  Outcome o;
  const double b = best_of_mean({1, 2, 3, 4, 5}, 3);
  o.note(fmtd("best-3 of (1..5) = %.17g", b));
  o.require(b == 4.0, "best-of mean is exactly 4.0");

  fs::remove_all(work / "protocol");
  RunConfig c = RunConfig::defaults(Profile::desk, Algorithm::tdsac);
  c.max_timesteps = c.start_timesteps + 500;
  Trainer tr(c, 5, work / "protocol");
  const std::string initial = fixtures::agent_bytes(tr.agent());
  tr.advance(c.start_timesteps);
  o.note(fmtd("after %ld warmup steps: %ld critic, %ld actor updates, buffer %zu", c.start_timesteps,
              tr.agent().critic_updates(), tr.agent().actor_updates(), tr.buffer().size()));
  o.require(tr.agent().train_steps() == 0 && tr.agent().critic_updates() == 0 && tr.agent().actor_updates() == 0,
            "no updates during warmup");
  o.require(fixtures::agent_bytes(tr.agent()) == initial, "warmup leaves the networks at their initial values");

  tr.advance(300);
  const std::string agent_before = fixtures::agent_bytes(tr.agent());
  const std::string buffer_before = fixtures::buffer_bytes(tr.buffer());
  evaluate(tr.agent(), c.env, c.eval_episodes, c.eval_best, tr.seed(), 0);
  o.require(fixtures::agent_bytes(tr.agent()) == agent_before, "evaluation leaves parameters and rng untouched");
  o.require(fixtures::buffer_bytes(tr.buffer()) == buffer_before, "evaluation leaves the buffer untouched");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  fs::path work = fs::temp_directory_path() / "slicerl_acceptance";
  std::string only;
  long steps = 0;
  app.add_option("--work", work, "directory for training runs");
  app.add_option("--only", only, "comma-separated criteria to run (default: all)");
  app.add_option("--steps", steps, "override desk max_timesteps for criteria 4-5 (development only)");
  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::warn);
  fs::create_directories(work);

  std::set<int> selected;
  if (!only.empty())
    for (auto s : parse_seed_list(only)) selected.insert(static_cast<int>(s));

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient correctness", gradients},
      {"radio/cost oracle equivalence", oracle_equivalence},
      {"algorithmic invariants", invariants},
      {"desk-scale learning", [&] { return desk_learning(work, steps); }},
      {"variant parity", [&] { return variant_parity(work, steps); }},
      {"determinism and resume", [&] { return determinism(work); }},
      {"protocol fidelity", [&] { return protocol(work); }},
  };

  std::string report;
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    failed += !o.pass;
    std::string block = fmtd("criterion %d %s: %s (%.1f s)\n", id, criteria[i].first.c_str(), o.pass ? "PASS" : "FAIL",
                             seconds_since(t0));
    for (const auto& n : o.notes) block += "    " + n + "\n";
    std::fputs(block.c_str(), stdout);
    std::fflush(stdout);
    report += block;
  }
  if (steps > 0) report += fmtd("NOTE: desk steps overridden to %ld\n", steps);
  std::ofstream(work / "acceptance_report.txt", std::ios::trunc) << report;
  return failed ? 1 : 0;
}
