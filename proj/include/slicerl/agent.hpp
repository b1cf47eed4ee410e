#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "slicerl/binary_io.hpp"
#include "slicerl/mlp.hpp"
#include "slicerl/replay_buffer.hpp"
#include "slicerl/rng.hpp"
#include "slicerl/squashed_gaussian.hpp"

namespace slicerl {

enum class Algorithm { tdsac, sac, td3, ddpg };

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& s);

/// Where -alpha log pi(a'|s') enters the bootstrap target.
enum class EntropyPlacement {
  outside_discount,  // y = r + gamma min Q' - alpha log pi
  inside_discount,   // y = r + gamma (min Q' - alpha log pi)
};

enum class ActionMode { explore, eval };

struct AgentConfig {
  Algorithm algorithm = Algorithm::tdsac;
  std::vector<int> hidden = {128, 128, 128, 128, 128};
  Activation activation = Activation::gelu;
  double actor_lr = 1e-3;
  double critic_lr = 1e-3;
  double alpha_lr = 1e-3;
  double gamma = 0.99;
  double tau = 0.001;
  int update_interval = 2;
  int batch_size = 128;
  double initial_alpha = 1.0;
  double target_entropy = 0.0;  // used only when explicit_target_entropy
  bool explicit_target_entropy = false;
  double exploration_noise = 0.1;  // TD3 Gaussian exploration std
  double policy_noise = 0.2;       // TD3 target smoothing std
  double noise_clip = 0.5;
  double ou_theta = 0.15;
  double ou_sigma = 0.2;
  double grad_clip = 10.0;
  double final_layer_scale = 1e-2;
  EntropyPlacement entropy_placement = EntropyPlacement::outside_discount;
  bool actor_uses_min_q = false;

  /// Architecture and hyperparameters of each algorithm's reference column.
  static AgentConfig defaults(Algorithm algorithm);

  bool stochastic() const { return algorithm == Algorithm::tdsac || algorithm == Algorithm::sac; }
  bool has_actor_target() const { return algorithm != Algorithm::tdsac; }
  int n_critics() const { return algorithm == Algorithm::ddpg ? 1 : 2; }
  void validate() const;
};

/// Per-call record of train_step.
struct Diagnostics {
  bool updated = false;
  bool actor_updated = false;
  double critic_loss_1 = 0.0;
  double critic_loss_2 = 0.0;
  double actor_loss = 0.0;
  double alpha_loss = 0.0;
  double alpha = 0.0;
  double mean_q = 0.0;
};

struct CriticLosses {
  double q1 = 0.0;
  double q2 = 0.0;
  double mean_q = 0.0;
};

template <typename Scalar>
struct ActorStep {
  double loss = 0.0;
  Eigen::Matrix<Scalar, 1, Eigen::Dynamic> log_prob;  // empty for deterministic actors
};

/// Off-policy actor-critic learner. TDSAC, SAC, TD3 and DDPG share the
/// machinery and differ in the networks they own and in the update rules
/// selected by AgentConfig::algorithm.
template <typename Scalar>
class Agent {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

  Agent(AgentConfig config, int obs_dim, int act_dim, std::uint64_t seed);

  Eigen::VectorXd select_action(const Eigen::VectorXd& state, ActionMode mode);
  /// Clears exploration-noise state at an episode boundary.
  void on_episode_start();

  /// Bootstrap targets y for a batch; next actions are drawn here.
  RowVector compute_target(const Batch<Scalar>& batch);
  CriticLosses critic_update(const Batch<Scalar>& batch);
  CriticLosses critic_update(const Batch<Scalar>& batch, const RowVector& target);
  ActorStep<Scalar> actor_update(const Batch<Scalar>& batch);
  /// One ADAM step on log alpha with gradient mean(-log pi - target entropy).
  /// Returns J(alpha) at the pre-update alpha.
  double temperature_update(const RowVector& log_prob);
  double temperature_update(const Batch<Scalar>& batch);
  void polyak_update();
  void polyak_update(double tau);

  /// Critic step on every call; actor, temperature and targets on every
  /// `update_interval`-th call for delayed variants, every call otherwise.
  Diagnostics train_step(ReplayBuffer<Scalar>& buffer);

  double alpha() const;
  double target_entropy() const;
  int network_count() const;

  const AgentConfig& config() const { return config_; }
  int obs_dim() const { return obs_dim_; }
  int act_dim() const { return act_dim_; }

  Mlp<Scalar>& actor() { return actor_; }
  const Mlp<Scalar>& actor() const { return actor_; }
  Mlp<Scalar>& actor_target() { return actor_target_; }
  Mlp<Scalar>& critic(int i) { return critics_[static_cast<std::size_t>(i)]; }
  const Mlp<Scalar>& critic(int i) const { return critics_[static_cast<std::size_t>(i)]; }
  Mlp<Scalar>& critic_target(int i) { return critic_targets_[static_cast<std::size_t>(i)]; }
  const Mlp<Scalar>& critic_target(int i) const { return critic_targets_[static_cast<std::size_t>(i)]; }
  Vector& log_alpha() { return log_alpha_; }
  Rng& rng() { return rng_; }

  long train_steps() const { return train_steps_; }
  long critic_updates() const { return critic_updates_; }
  long actor_updates() const { return actor_updates_; }
  long target_updates() const { return target_updates_; }

  void save(BinaryWriter& w) const;
  void load(BinaryReader& r);

  /// Actor head split: first act_dim rows are means, the rest raw log-stds.
  Matrix policy_mean(const Matrix& states) const;

 private:
  Matrix critic_input(const Matrix& states, const Matrix& actions) const;
  Matrix standard_normal(Eigen::Index rows, Eigen::Index cols);
  SquashedSample<Scalar> sample_policy(const Mlp<Scalar>& actor, const Matrix& states);
  void apply(Mlp<Scalar>& net, Vector grads, AdamState<Scalar>& opt);

  AgentConfig config_;
  int obs_dim_;
  int act_dim_;
  Rng rng_;

  Mlp<Scalar> actor_;
  Mlp<Scalar> actor_target_;
  std::vector<Mlp<Scalar>> critics_;
  std::vector<Mlp<Scalar>> critic_targets_;
  AdamState<Scalar> actor_opt_;
  std::vector<AdamState<Scalar>> critic_opts_;
  Vector log_alpha_;
  AdamState<Scalar> alpha_opt_;
  Vector ou_state_;

  long train_steps_ = 0;
  long critic_updates_ = 0;
  long actor_updates_ = 0;
  long target_updates_ = 0;
};

extern template class Agent<float>;
extern template class Agent<double>;

}  // namespace slicerl
