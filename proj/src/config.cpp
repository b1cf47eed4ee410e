#include "slicerl/config.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace slicerl {

namespace pt = boost::property_tree;

std::string to_string(Profile p) { return p == Profile::desk ? "desk" : "paper"; }

Profile profile_from_string(const std::string& s) {
  if (s == "desk") return Profile::desk;
  if (s == "paper") return Profile::paper;
  throw ConfigError("unknown profile '" + s + "' (expected desk or paper)");
}

RunConfig RunConfig::defaults(Profile profile, Algorithm algorithm) {
  RunConfig c;
  c.profile = profile;
  c.agent = AgentConfig::defaults(algorithm);
  if (profile == Profile::desk) {
    c.env = EnvConfig::desk();
    c.agent.batch_size = 64;
    // 1e-3 is tuned for millions of steps; at 5e4 the actor overshoots and drifts back down
    c.agent.actor_lr = 3e-4;
    c.agent.critic_lr = 3e-4;
  } else {
    c.env = EnvConfig::paper();
    c.max_timesteps = 2000000;
    c.start_timesteps = 10000;
    c.eval_interval = 20000;
    c.buffer_capacity = 1000000;
    c.log_interval = 10000;
  }
  return c;
}

void RunConfig::validate() const {
  try {
    agent.validate();
    env.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (max_timesteps < 1) throw ConfigError("max_timesteps must be >= 1");
  if (start_timesteps < 0 || start_timesteps > max_timesteps)
    throw ConfigError("start_timesteps must lie in [0, max_timesteps]");
  if (eval_interval < 1) throw ConfigError("eval_interval must be >= 1");
  if (eval_episodes < 1) throw ConfigError("eval_episodes must be >= 1");
  if (eval_best < 1 || eval_best > eval_episodes) throw ConfigError("eval_best must lie in [1, eval_episodes]");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (buffer_capacity < 1) throw ConfigError("buffer_capacity must be >= 1");
  if (log_interval < 1) throw ConfigError("log_interval must be >= 1");
  if (wallclock_window < 1) throw ConfigError("wallclock_window must be >= 1");
}

namespace {

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing characters");
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

long to_long(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d != std::floor(d)) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return static_cast<long>(d);
}

bool to_bool(const std::string& key, const std::string& v) {
  const auto s = boost::algorithm::to_lower_copy(v);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> parts;
  boost::algorithm::split(parts, v, boost::is_any_of(","));
  for (auto& p : parts) boost::algorithm::trim(p);
  parts.erase(std::remove(parts.begin(), parts.end(), std::string()), parts.end());
  return parts;
}

template <typename T>
std::string join(const std::vector<T>& xs) {
  return fmt::format("{}", fmt::join(xs, ","));
}

std::string num(double x) { return fmt::format("{}", x); }

using Setter = std::function<void(const std::string& key, const std::string& value)>;
using Section = std::map<std::string, Setter>;

Setter set(double& field) {
  return [&field](const std::string& k, const std::string& v) { field = to_double(k, v); };
}
Setter set(int& field) {
  return [&field](const std::string& k, const std::string& v) { field = static_cast<int>(to_long(k, v)); };
}
Setter set(long& field) {
  return [&field](const std::string& k, const std::string& v) { field = to_long(k, v); };
}
Setter set(bool& field) {
  return [&field](const std::string& k, const std::string& v) { field = to_bool(k, v); };
}

Section run_section(RunConfig& c) {
  return {
      {"profile", [](const std::string&, const std::string&) {}},
      {"algorithm", [](const std::string&, const std::string&) {}},
      {"max_timesteps", set(c.max_timesteps)},
      {"start_timesteps", set(c.start_timesteps)},
      {"eval_interval", set(c.eval_interval)},
      {"eval_episodes", set(c.eval_episodes)},
      {"eval_best", set(c.eval_best)},
      {"log_interval", set(c.log_interval)},
      {"wallclock_window", set(c.wallclock_window)},
      {"checkpoint_buffer", set(c.checkpoint_buffer)},
      {"dump_trajectory", set(c.dump_trajectory)},
      {"output_dir", [&c](const std::string&, const std::string& v) { c.output_dir = v; }},
      {"buffer_capacity",
       [&c](const std::string& k, const std::string& v) {
         const long n = to_long(k, v);
         if (n < 1) throw ConfigError(k + " must be >= 1");
         c.buffer_capacity = static_cast<std::size_t>(n);
       }},
      {"seeds", [&c](const std::string&, const std::string& v) { c.seeds = parse_seed_list(v); }},
  };
}

Section agent_section(AgentConfig& a) {
  return {
      {"hidden",
       [&a](const std::string& k, const std::string& v) {
         a.hidden.clear();
         for (const auto& s : split_list(v)) a.hidden.push_back(static_cast<int>(to_long(k, s)));
       }},
      {"activation",
       [&a](const std::string& k, const std::string& v) {
         try {
           a.activation = activation_from_string(v);
         } catch (const std::invalid_argument&) {
           throw ConfigError(k + ": unknown activation '" + v + "'");
         }
       }},
      {"actor_lr", set(a.actor_lr)},
      {"critic_lr", set(a.critic_lr)},
      {"alpha_lr", set(a.alpha_lr)},
      {"gamma", set(a.gamma)},
      {"tau", set(a.tau)},
      {"update_interval", set(a.update_interval)},
      {"batch_size", set(a.batch_size)},
      {"initial_alpha", set(a.initial_alpha)},
      {"target_entropy",
       [&a](const std::string& k, const std::string& v) {
         if (v == "auto") {
           a.explicit_target_entropy = false;
         } else {
           a.target_entropy = to_double(k, v);
           a.explicit_target_entropy = true;
         }
       }},
      {"exploration_noise", set(a.exploration_noise)},
      {"policy_noise", set(a.policy_noise)},
      {"noise_clip", set(a.noise_clip)},
      {"ou_theta", set(a.ou_theta)},
      {"ou_sigma", set(a.ou_sigma)},
      {"grad_clip", set(a.grad_clip)},
      {"final_layer_scale", set(a.final_layer_scale)},
      {"entropy_placement",
       [&a](const std::string& k, const std::string& v) {
         if (v == "outside")
           a.entropy_placement = EntropyPlacement::outside_discount;
         else if (v == "inside")
           a.entropy_placement = EntropyPlacement::inside_discount;
         else
           throw ConfigError(k + ": expected outside or inside");
       }},
      {"actor_uses_min_q", set(a.actor_uses_min_q)},
  };
}

Section env_section(EnvConfig& e) {
  return {
      {"n_aps", set(e.radio.n_aps)},
      {"n_users_max", set(e.radio.n_users_max)},
      {"horizon", set(e.horizon)},
      {"omega_hat", set(e.omega_hat)},
      {"energy_floor_w", set(e.energy_floor_w)},
      {"mean_lifetime_steps", set(e.mean_lifetime_steps)},
      {"min_distance_km", set(e.min_distance_km)},
      {"max_distance_km", set(e.max_distance_km)},
      {"energy_cap_w", set(e.energy_cap_w)},
      {"antenna_gain_dbi", set(e.radio.antenna_gain_dbi)},
      {"shadowing_std_db", set(e.radio.shadowing_std_db)},
      {"noise_dbm", set(e.radio.noise_dbm)},
      {"bandwidth_hz", set(e.radio.bandwidth_hz)},
      {"p_max_watts", set(e.radio.p_max_watts)},
      {"reg_noise", set(e.radio.reg_noise)},
      {"path_loss_base",
       [&e](const std::string& k, const std::string& v) {
         const long b = to_long(k, v);
         if (b == 2)
           e.radio.path_loss_base = LogBase::binary;
         else if (b == 10)
           e.radio.path_loss_base = LogBase::decimal;
         else
           throw ConfigError(k + ": expected 2 or 10");
       }},
      {"slices", [](const std::string&, const std::string&) {}},  // handled before the other keys
  };
}

Section compute_section(ComputeModel& m) {
  return {
      {"theta_hat", set(m.theta_hat)},
      {"c0", set(m.c0)},
      {"delta", set(m.delta)},
      {"active_link_epsilon", set(m.active_link_epsilon)},
      {"iota", set(m.iota)},
      {"p_z", set(m.p_z)},
      {"psi_vnf", set(m.psi_vnf)},
      {"max_vnfs", set(m.max_vnfs)},
      {"max_cpus", set(m.max_cpus)},
      {"vnf_capacity_cores", set(m.vnf_capacity_cores)},
  };
}

Section slice_section(SliceSpec& s) {
  return {
      {"sinr_threshold", set(s.sinr_threshold)},
      {"cpu_threshold", set(s.cpu_threshold)},
      {"arrival_rate", set(s.arrival_rate)},
      {"penalty_sinr", set(s.penalty_sinr)},
      {"penalty_cpu", set(s.penalty_cpu)},
  };
}

void apply(const pt::ptree& tree, const std::string& name, const Section& section) {
  for (const auto& [key, node] : tree) {
    if (!node.empty()) throw ConfigError("[" + name + "] " + key + ": nested keys are not supported");
    const auto it = section.find(key);
    if (it == section.end()) throw ConfigError("[" + name + "] unknown key '" + key + "'");
    it->second(name + "." + key, boost::algorithm::trim_copy(node.data()));
  }
}

std::string get(const pt::ptree& tree, const std::string& section, const std::string& key, const std::string& fallback) {
  const auto s = tree.get_child_optional(section);
  if (!s) return fallback;
  const auto v = s->get_optional<std::string>(key);
  return v ? boost::algorithm::trim_copy(*v) : fallback;
}

}  // namespace

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  for (const auto& s : split_list(text)) {
    const long n = to_long("seeds", s);
    if (n < 0) throw ConfigError("seeds must be non-negative");
    seeds.push_back(static_cast<std::uint64_t>(n));
  }
  return seeds;
}

RunConfig parse_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream is(text);
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }

  const Profile profile = profile_from_string(get(tree, "run", "profile", "desk"));
  Algorithm algorithm;
  try {
    algorithm = algorithm_from_string(get(tree, "run", "algorithm", "tdsac"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  RunConfig c = RunConfig::defaults(profile, algorithm);

  const std::string slices = get(tree, "env", "slices", "");
  if (!slices.empty()) {
    std::vector<SliceSpec> chosen;
    for (const auto& id : split_list(slices)) {
      const auto it = std::find_if(c.env.slices.begin(), c.env.slices.end(), [&](const SliceSpec& s) { return s.id == id; });
      SliceSpec s = it != c.env.slices.end() ? *it : SliceSpec{};
      s.id = id;
      chosen.push_back(s);
    }
    c.env.slices = chosen;
  }

  for (const auto& [name, node] : tree) {
    if (name == "run") {
      apply(node, name, run_section(c));
    } else if (name == "agent") {
      apply(node, name, agent_section(c.agent));
    } else if (name == "env") {
      apply(node, name, env_section(c.env));
    } else if (name == "compute") {
      apply(node, name, compute_section(c.env.compute));
    } else if (boost::algorithm::starts_with(name, "slice.")) {
      const std::string id = name.substr(6);
      const auto it = std::find_if(c.env.slices.begin(), c.env.slices.end(), [&](const SliceSpec& s) { return s.id == id; });
      if (it == c.env.slices.end()) throw ConfigError("[" + name + "] names a slice missing from env.slices");
      apply(node, name, slice_section(*it));
    } else {
      throw ConfigError("unknown section [" + name + "]");
    }
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string to_ini(const RunConfig& c) {
  const auto& a = c.agent;
  const auto& e = c.env;
  const auto& m = e.compute;
  std::string out;
  auto line = [&out](const std::string& k, const std::string& v) { out += k + " = " + v + "\n"; };

  out += "[run]\n";
  line("profile", to_string(c.profile));
  line("algorithm", to_string(a.algorithm));
  line("max_timesteps", std::to_string(c.max_timesteps));
  line("start_timesteps", std::to_string(c.start_timesteps));
  line("eval_interval", std::to_string(c.eval_interval));
  line("eval_episodes", std::to_string(c.eval_episodes));
  line("eval_best", std::to_string(c.eval_best));
  line("seeds", join(c.seeds));
  line("output_dir", c.output_dir);
  line("buffer_capacity", std::to_string(c.buffer_capacity));
  line("log_interval", std::to_string(c.log_interval));
  line("wallclock_window", std::to_string(c.wallclock_window));
  line("checkpoint_buffer", c.checkpoint_buffer ? "true" : "false");
  line("dump_trajectory", c.dump_trajectory ? "true" : "false");

  out += "\n[agent]\n";
  line("hidden", join(a.hidden));
  line("activation", to_string(a.activation));
  line("actor_lr", num(a.actor_lr));
  line("critic_lr", num(a.critic_lr));
  line("alpha_lr", num(a.alpha_lr));
  line("gamma", num(a.gamma));
  line("tau", num(a.tau));
  line("update_interval", std::to_string(a.update_interval));
  line("batch_size", std::to_string(a.batch_size));
  line("initial_alpha", num(a.initial_alpha));
  line("target_entropy", a.explicit_target_entropy ? num(a.target_entropy) : "auto");
  line("exploration_noise", num(a.exploration_noise));
  line("policy_noise", num(a.policy_noise));
  line("noise_clip", num(a.noise_clip));
  line("ou_theta", num(a.ou_theta));
  line("ou_sigma", num(a.ou_sigma));
  line("grad_clip", num(a.grad_clip));
  line("final_layer_scale", num(a.final_layer_scale));
  line("entropy_placement", a.entropy_placement == EntropyPlacement::outside_discount ? "outside" : "inside");
  line("actor_uses_min_q", a.actor_uses_min_q ? "true" : "false");

  out += "\n[env]\n";
  std::vector<std::string> ids;
  for (const auto& s : e.slices) ids.push_back(s.id);
  line("slices", join(ids));
  line("n_aps", std::to_string(e.radio.n_aps));
  line("n_users_max", std::to_string(e.radio.n_users_max));
  line("horizon", std::to_string(e.horizon));
  line("omega_hat", num(e.omega_hat));
  line("energy_floor_w", num(e.energy_floor_w));
  line("mean_lifetime_steps", num(e.mean_lifetime_steps));
  line("min_distance_km", num(e.min_distance_km));
  line("max_distance_km", num(e.max_distance_km));
  line("energy_cap_w", num(e.energy_cap_w));
  line("antenna_gain_dbi", num(e.radio.antenna_gain_dbi));
  line("shadowing_std_db", num(e.radio.shadowing_std_db));
  line("noise_dbm", num(e.radio.noise_dbm));
  line("bandwidth_hz", num(e.radio.bandwidth_hz));
  line("p_max_watts", num(e.radio.p_max_watts));
  line("reg_noise", num(e.radio.reg_noise));
  line("path_loss_base", std::to_string(static_cast<int>(e.radio.path_loss_base)));

  out += "\n[compute]\n";
  line("theta_hat", num(m.theta_hat));
  line("c0", num(m.c0));
  line("delta", num(m.delta));
  line("active_link_epsilon", num(m.active_link_epsilon));
  line("iota", num(m.iota));
  line("p_z", num(m.p_z));
  line("psi_vnf", num(m.psi_vnf));
  line("max_vnfs", std::to_string(m.max_vnfs));
  line("max_cpus", std::to_string(m.max_cpus));
  line("vnf_capacity_cores", num(m.vnf_capacity_cores));

  for (const auto& s : e.slices) {
    out += "\n[slice." + s.id + "]\n";
    line("sinr_threshold", num(s.sinr_threshold));
    line("cpu_threshold", num(s.cpu_threshold));
    line("arrival_rate", num(s.arrival_rate));
    line("penalty_sinr", num(s.penalty_sinr));
    line("penalty_cpu", num(s.penalty_cpu));
  }
  return out;
}

}  // namespace slicerl
