#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "slicerl/costmodel.hpp"
#include "slicerl/netmodel.hpp"
#include "slicerl/rng.hpp"

namespace slicerl {

/// QoS contract and traffic of one slice.
struct SliceSpec {
  std::string id;
  double sinr_threshold = 1.0;  // linear
  double cpu_threshold = 1.0;   // cores per user
  double arrival_rate = 1.0;    // Poisson mean, requests per step
  double penalty_sinr = 1.0;
  double penalty_cpu = 0.4;

  void validate() const;
};

struct EnvConfig {
  RadioTopology radio;
  ComputeModel compute;
  std::vector<SliceSpec> slices;
  int horizon = 200;
  double omega_hat = 1.0;
  double energy_floor_w = 1e-6;
  double mean_lifetime_steps = 20.0;
  double min_distance_km = 0.01;
  double max_distance_km = 0.6;
  double energy_cap_w = 0.0;  // S3 scale; <= 0 selects the worst-case network draw

  void validate() const;
  int n_slices() const { return static_cast<int>(slices.size()); }
  int obs_dim() const { return 3 * n_slices() + 1; }
  int action_dim() const { return 1 + n_slices(); }
  double cpu_capacity() const { return static_cast<double>(compute.max_cpus); }
  double energy_cap() const;

  /// 4 APs, up to 8 users, three slices.
  static EnvConfig desk();
  /// 20 APs, up to 50 users, three slices.
  static EnvConfig paper();
};

struct User {
  int slice = 0;
  Eigen::VectorXd distances;  // km to every AP
};

/// Everything the next step depends on, including the random stream.
struct EnvState {
  Eigen::VectorXd arrivals;         // S1, per slice
  Eigen::VectorXd cpu_allocated;    // S2, cores per slice VNF
  double energy_status_w = 0.0;     // S3, previous total energy
  Eigen::VectorXd users_per_slice;  // S4
  std::vector<User> users;
  double cpu_requirement = 0.0;  // C_Net, last step's total demand
  int step = 0;
  int horizon = 0;
  std::string rng_state;
};

/// Which users miss their slice's QoS contract.
struct Violations {
  Eigen::Array<bool, Eigen::Dynamic, 1> sinr;
  Eigen::Array<bool, Eigen::Dynamic, 1> cpu;
  Eigen::VectorXi indicator;  // per-user chi_m
  int chi = 0;                // 1 if any user violates

  int sinr_count() const { return static_cast<int>(sinr.count()); }
  int cpu_count() const { return static_cast<int>(cpu.count()); }
};

struct StepInfo {
  CostBreakdown cost;
  Eigen::VectorXd sinr;
  Eigen::VectorXd cpu_demand;  // per-user Delta_m
  Violations violations;
  double penalty = 0.0;  // raw sum of per-user penalties
  double allocation_cores = 0.0;
  double demand_cores = 0.0;
  double cpu_utilization = 0.0;
  Eigen::VectorXd energy_per_slice;
  Eigen::VectorXd slice_power;  // p_l after rescaling
  int n_users = 0;
};

struct StepOutcome {
  Eigen::VectorXd observation;
  double reward = 0.0;
  bool done = false;
  bool truncated = false;  // done because the horizon was reached
  StepInfo info;
};

/// chi_m = 0 iff SINR_m >= SINR_th and Delta_m <= Delta_th and the user's
/// load is covered by the allocated CPU pool.
Violations constraint_indicator(const Eigen::VectorXd& sinr, const Eigen::VectorXd& delta,
                                const std::vector<SliceSpec>& slices,
                                const std::vector<int>& slice_of_user, bool cpu_covered = true);

/// Sum of -rho over violating users. A user failing both constraints pays the
/// SINR penalty only.
double penalty(const Violations& violations, const std::vector<SliceSpec>& slices,
               const std::vector<int>& slice_of_user);

/// (M / E + penalties) / omega_hat, clamped to [-1, 1]. Energy below the floor
/// is raised to the floor; zero users yields 0.
double reward(const CostBreakdown& breakdown, int n_users, double penalties, double omega_hat,
              double energy_floor_w = 1e-6);

/// Maps a raw component in [-1, 1] onto [lo, hi].
inline double rescale(double raw, double lo, double hi) { return lo + 0.5 * (raw + 1.0) * (hi - lo); }

class SliceEnv {
 public:
  explicit SliceEnv(EnvConfig config);

  Eigen::VectorXd reset(std::uint64_t seed);
  StepOutcome step(const Eigen::VectorXd& action);

  Eigen::VectorXd observation() const;
  EnvState state() const;
  void restore(const EnvState& state);

  const EnvConfig& config() const { return config_; }
  int obs_dim() const { return config_.obs_dim(); }
  int action_dim() const { return config_.action_dim(); }

 private:
  void admit(int slice);
  void evolve_traffic();

  EnvConfig config_;
  EnvState state_;
  Rng rng_;
};

}  // namespace slicerl
