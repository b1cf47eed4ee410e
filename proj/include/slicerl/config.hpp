#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "slicerl/agent.hpp"
#include "slicerl/sliceenv.hpp"

namespace slicerl {

/// Malformed or inconsistent configuration; the CLI maps it to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Profile { desk, paper };

std::string to_string(Profile p);
Profile profile_from_string(const std::string& s);

struct RunConfig {
  Profile profile = Profile::desk;
  AgentConfig agent = AgentConfig::defaults(Algorithm::tdsac);
  EnvConfig env = EnvConfig::desk();

  long max_timesteps = 50000;
  long start_timesteps = 5000;
  long eval_interval = 5000;
  int eval_episodes = 5;
  int eval_best = 3;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::string output_dir = "runs";
  std::size_t buffer_capacity = 100000;
  long log_interval = 1000;     // steps per update-window metrics row
  int wallclock_window = 50;    // steps per timing sample
  bool checkpoint_buffer = true;
  bool dump_trajectory = false;

  /// Profile defaults with the algorithm's own agent column.
  static RunConfig defaults(Profile profile, Algorithm algorithm);

  void validate() const;
};

/// Reads a sectioned key = value file. Unknown keys are rejected.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& text);
/// "1, 2,3" -> {1, 2, 3}.
std::vector<std::uint64_t> parse_seed_list(const std::string& text);
/// Fully resolved config in the same format; parse_config(to_ini(c)) == c.
std::string to_ini(const RunConfig& c);

}  // namespace slicerl
