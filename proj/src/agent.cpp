#include "slicerl/agent.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include "slicerl/mlp_io.hpp"

namespace slicerl {

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::tdsac: return "tdsac";
    case Algorithm::sac: return "sac";
    case Algorithm::td3: return "td3";
    case Algorithm::ddpg: return "ddpg";
  }
  return "?";
}

Algorithm algorithm_from_string(const std::string& s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "tdsac") return Algorithm::tdsac;
  if (lower == "sac") return Algorithm::sac;
  if (lower == "td3") return Algorithm::td3;
  if (lower == "ddpg") return Algorithm::ddpg;
  throw std::invalid_argument("unknown algorithm '" + s + "'");
}

AgentConfig AgentConfig::defaults(Algorithm algorithm) {
  AgentConfig c;
  c.algorithm = algorithm;
  switch (algorithm) {
    case Algorithm::tdsac:
      break;
    case Algorithm::sac:
      c.hidden = {256, 256};
      c.activation = Activation::relu;
      c.actor_lr = 1e-4;
      c.critic_lr = 1e-4;
      c.tau = 0.005;
      c.update_interval = 1;
      c.batch_size = 256;
      c.entropy_placement = EntropyPlacement::inside_discount;
      break;
    case Algorithm::td3:
      c.hidden = {400, 300};
      c.activation = Activation::relu;
      c.tau = 0.005;
      c.update_interval = 2;
      c.batch_size = 100;
      break;
    case Algorithm::ddpg:
      c.hidden = {200, 200};
      c.activation = Activation::relu;
      c.actor_lr = 1e-4;
      c.critic_lr = 1e-3;
      c.tau = 0.001;
      c.update_interval = 1;
      c.batch_size = 64;
      break;
  }
  return c;
}

void AgentConfig::validate() const {
  if (hidden.empty()) throw std::invalid_argument("agent: at least one hidden layer");
  for (int h : hidden)
    if (h < 1) throw std::invalid_argument("agent: hidden widths must be >= 1");
  if (!(actor_lr > 0) || !(critic_lr > 0) || !(alpha_lr > 0))
    throw std::invalid_argument("agent: learning rates must be positive");
  if (!(gamma >= 0 && gamma <= 1)) throw std::invalid_argument("agent: gamma must lie in [0, 1]");
  if (!(tau >= 0 && tau <= 1)) throw std::invalid_argument("agent: tau must lie in [0, 1]");
  if (update_interval < 1) throw std::invalid_argument("agent: update_interval must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("agent: batch_size must be >= 1");
  if (!(initial_alpha > 0)) throw std::invalid_argument("agent: initial_alpha must be positive");
}

template <typename Scalar>
Agent<Scalar>::Agent(AgentConfig config, int obs_dim, int act_dim, std::uint64_t seed)
    : config_(std::move(config)), obs_dim_(obs_dim), act_dim_(act_dim), rng_(seed) {
  config_.validate();
  if (obs_dim < 1 || act_dim < 1) throw std::invalid_argument("agent: dimensions must be >= 1");

  auto widths = [&](int in, int out) {
    std::vector<int> s{in};
    s.insert(s.end(), config_.hidden.begin(), config_.hidden.end());
    s.push_back(out);
    return s;
  };
  const int actor_out = config_.stochastic() ? 2 * act_dim : act_dim;
  actor_ = Mlp<Scalar>(widths(obs_dim, actor_out), config_.activation);
  actor_.initialize(rng_, config_.final_layer_scale);
  if (config_.has_actor_target()) actor_target_ = actor_;
  actor_opt_ = AdamState<Scalar>(actor_.n_params(), static_cast<Scalar>(config_.actor_lr));

  for (int i = 0; i < config_.n_critics(); ++i) {
    Mlp<Scalar> q(widths(obs_dim + act_dim, 1), config_.activation);
    q.initialize(rng_);
    critic_opts_.emplace_back(q.n_params(), static_cast<Scalar>(config_.critic_lr));
    critic_targets_.push_back(q);
    critics_.push_back(std::move(q));
  }

  log_alpha_ = Vector::Constant(1, static_cast<Scalar>(std::log(config_.initial_alpha)));
  alpha_opt_ = AdamState<Scalar>(1, static_cast<Scalar>(config_.alpha_lr));
  ou_state_ = Vector::Zero(act_dim);
}

template <typename Scalar>
double Agent<Scalar>::alpha() const {
  return config_.stochastic() ? std::exp(static_cast<double>(log_alpha_(0))) : 0.0;
}

template <typename Scalar>
double Agent<Scalar>::target_entropy() const {
  return config_.explicit_target_entropy ? config_.target_entropy : -static_cast<double>(act_dim_);
}

template <typename Scalar>
int Agent<Scalar>::network_count() const {
  return 1 + (config_.has_actor_target() ? 1 : 0) + static_cast<int>(critics_.size() + critic_targets_.size());
}

template <typename Scalar>
typename Agent<Scalar>::Matrix Agent<Scalar>::critic_input(const Matrix& states, const Matrix& actions) const {
  Matrix in(obs_dim_ + act_dim_, states.cols());
  in.topRows(obs_dim_) = states;
  in.bottomRows(act_dim_) = actions;
  return in;
}

template <typename Scalar>
typename Agent<Scalar>::Matrix Agent<Scalar>::standard_normal(Eigen::Index rows, Eigen::Index cols) {
  Matrix xi(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) xi(i, j) = static_cast<Scalar>(rng_.normal());
  return xi;
}

template <typename Scalar>
typename Agent<Scalar>::Matrix Agent<Scalar>::policy_mean(const Matrix& states) const {
  const Matrix out = actor_.forward(states);
  return out.topRows(act_dim_);
}

template <typename Scalar>
SquashedSample<Scalar> Agent<Scalar>::sample_policy(const Mlp<Scalar>& actor, const Matrix& states) {
  const Matrix out = actor.forward(states);
  const Matrix log_std = clamp_log_std(out.bottomRows(act_dim_));
  const Matrix xi = standard_normal(act_dim_, states.cols());
  return sample_squashed_gaussian<Scalar>(out.topRows(act_dim_), log_std, xi);
}

template <typename Scalar>
Eigen::VectorXd Agent<Scalar>::select_action(const Eigen::VectorXd& state, ActionMode mode) {
  if (state.size() != obs_dim_) throw std::invalid_argument("select_action: state dimension mismatch");
  const Matrix s = state.cast<Scalar>();
  Vector a;
  if (config_.stochastic()) {
    if (mode == ActionMode::eval) {
      a = policy_mean(s).array().tanh();
    } else {
      a = sample_policy(actor_, s).action;
    }
  } else {
    a = actor_.forward(s).array().tanh();
    if (mode == ActionMode::explore) {
      if (config_.algorithm == Algorithm::ddpg) {
        for (Eigen::Index i = 0; i < a.size(); ++i)
          ou_state_(i) += static_cast<Scalar>(-config_.ou_theta * ou_state_(i) + config_.ou_sigma * rng_.normal());
        a += ou_state_;
      } else {
        for (Eigen::Index i = 0; i < a.size(); ++i)
          a(i) += static_cast<Scalar>(rng_.normal(0.0, config_.exploration_noise));
      }
      a = a.cwiseMax(Scalar(-1)).cwiseMin(Scalar(1));
    }
  }
  return a.template cast<double>();
}

template <typename Scalar>
void Agent<Scalar>::on_episode_start() {
  ou_state_.setZero();
}

template <typename Scalar>
typename Agent<Scalar>::RowVector Agent<Scalar>::compute_target(const Batch<Scalar>& batch) {
  const auto& next = batch.next_states;
  const RowVector not_done = RowVector::Ones(batch.size()) - batch.dones;
  const auto gamma = static_cast<Scalar>(config_.gamma);

  if (config_.stochastic()) {
    // TDSAC draws a' from the current policy; the SAC baseline from its target policy.
    const Mlp<Scalar>& policy = config_.algorithm == Algorithm::tdsac ? actor_ : actor_target_;
    const SquashedSample<Scalar> s = sample_policy(policy, next);
    const Matrix in = critic_input(next, s.action);
    const RowVector min_q = critic_targets_[0].forward(in).cwiseMin(critic_targets_[1].forward(in));
    const auto a = static_cast<Scalar>(alpha());
    if (config_.entropy_placement == EntropyPlacement::outside_discount)
      return batch.rewards + not_done.cwiseProduct(gamma * min_q - a * s.log_prob);
    return batch.rewards + gamma * not_done.cwiseProduct(min_q - a * s.log_prob);
  }

  Matrix next_action = actor_target_.forward(next).array().tanh();
  if (config_.algorithm == Algorithm::td3) {
    const auto clip = static_cast<Scalar>(config_.noise_clip);
    for (Eigen::Index j = 0; j < next_action.cols(); ++j)
      for (Eigen::Index i = 0; i < next_action.rows(); ++i) {
        const Scalar eps = std::clamp(static_cast<Scalar>(rng_.normal(0.0, config_.policy_noise)), -clip, clip);
        next_action(i, j) = std::clamp(next_action(i, j) + eps, Scalar(-1), Scalar(1));
      }
  }
  const Matrix in = critic_input(next, next_action);
  RowVector q = critic_targets_[0].forward(in);
  if (critic_targets_.size() > 1) q = q.cwiseMin(critic_targets_[1].forward(in));
  return batch.rewards + gamma * not_done.cwiseProduct(q);
}

template <typename Scalar>
void Agent<Scalar>::apply(Mlp<Scalar>& net, Vector grads, AdamState<Scalar>& opt) {
  clip_global_norm<Scalar>(grads, static_cast<Scalar>(config_.grad_clip));
  adam_step<Scalar>(net.params(), grads, opt);
}

template <typename Scalar>
CriticLosses Agent<Scalar>::critic_update(const Batch<Scalar>& batch) {
  return critic_update(batch, compute_target(batch));
}

template <typename Scalar>
CriticLosses Agent<Scalar>::critic_update(const Batch<Scalar>& batch, const RowVector& target) {
  if (target.size() != batch.size()) throw std::invalid_argument("critic_update: target size mismatch");
  const Matrix in = critic_input(batch.states, batch.actions);
  const auto n = static_cast<Scalar>(batch.size());
  CriticLosses out;
  for (std::size_t i = 0; i < critics_.size(); ++i) {
    typename Mlp<Scalar>::Tape tape;
    const RowVector q = critics_[i].forward(in, tape);
    const RowVector diff = q - target;
    const double loss = static_cast<double>(diff.squaredNorm() / n);
    if (i == 0) {
      out.q1 = loss;
      out.mean_q = static_cast<double>(q.mean());
    } else {
      out.q2 = loss;
    }
    const Matrix upstream = (Scalar(2) / n) * diff;
    apply(critics_[i], critics_[i].backward(tape, upstream, false).params, critic_opts_[i]);
  }
  ++critic_updates_;
  return out;
}

template <typename Scalar>
ActorStep<Scalar> Agent<Scalar>::actor_update(const Batch<Scalar>& batch) {
  const Matrix& states = batch.states;
  const auto b = states.cols();
  const auto n = static_cast<Scalar>(b);
  ActorStep<Scalar> out;

  // Q values and dQ/da at the given actions; frozen critic parameters.
  auto q_and_grad = [&](const Matrix& actions, RowVector& q, Matrix& dq_da) {
    const Matrix in = critic_input(states, actions);
    const int used = config_.actor_uses_min_q && critics_.size() > 1 ? 2 : 1;
    std::vector<RowVector> qs(static_cast<std::size_t>(used));
    std::vector<Matrix> grads(static_cast<std::size_t>(used));
    for (int i = 0; i < used; ++i) {
      typename Mlp<Scalar>::Tape tape;
      qs[static_cast<std::size_t>(i)] = critics_[static_cast<std::size_t>(i)].forward(in, tape);
      grads[static_cast<std::size_t>(i)] =
          critics_[static_cast<std::size_t>(i)].backward(tape, RowVector::Ones(b), true).input.bottomRows(act_dim_);
    }
    q = qs[0];
    dq_da = grads[0];
    if (used == 2) {
      for (Eigen::Index j = 0; j < b; ++j)
        if (qs[1](j) < qs[0](j)) {
          q(j) = qs[1](j);
          dq_da.col(j) = grads[1].col(j);
        }
    }
  };

  typename Mlp<Scalar>::Tape tape;
  const Matrix head = actor_.forward(states, tape);
  RowVector q;
  Matrix dq_da;

  if (config_.stochastic()) {
    const Matrix raw_log_std = head.bottomRows(act_dim_);
    const Matrix log_std = clamp_log_std(raw_log_std);
    const Matrix xi = standard_normal(act_dim_, b);
    const SquashedSample<Scalar> s = sample_squashed_gaussian<Scalar>(head.topRows(act_dim_), log_std, xi);
    q_and_grad(s.action, q, dq_da);

    const auto a = static_cast<Scalar>(alpha());
    out.loss = static_cast<double>((a * s.log_prob - q).mean());
    out.log_prob = s.log_prob;

    const Matrix d_action = -dq_da / n;
    const RowVector d_log_prob = RowVector::Constant(b, a / n);
    SquashedGradients<Scalar> g = squashed_gaussian_backward<Scalar>(log_std, xi, s, d_action, d_log_prob);
    // clamped log-std entries pass no gradient
    g.log_std = (raw_log_std.array() >= Scalar(kLogStdMin) && raw_log_std.array() <= Scalar(kLogStdMax))
                    .select(g.log_std, Scalar(0));
    Matrix upstream(2 * act_dim_, b);
    upstream.topRows(act_dim_) = g.mean;
    upstream.bottomRows(act_dim_) = g.log_std;
    apply(actor_, actor_.backward(tape, upstream, false).params, actor_opt_);
  } else {
    const Matrix action = head.array().tanh();
    q_and_grad(action, q, dq_da);
    out.loss = static_cast<double>(-q.mean());
    const Matrix upstream = (-dq_da / n).cwiseProduct((Scalar(1) - action.array().square()).matrix());
    apply(actor_, actor_.backward(tape, upstream, false).params, actor_opt_);
  }
  ++actor_updates_;
  return out;
}

template <typename Scalar>
double Agent<Scalar>::temperature_update(const RowVector& log_prob) {
  if (!config_.stochastic() || log_prob.size() == 0) return 0.0;
  const double grad = (-log_prob.template cast<double>().array() - target_entropy()).mean();
  const double loss = alpha() * grad;
  const Vector g = Vector::Constant(1, static_cast<Scalar>(grad));
  adam_step<Scalar>(log_alpha_, g, alpha_opt_);
  return loss;
}

template <typename Scalar>
double Agent<Scalar>::temperature_update(const Batch<Scalar>& batch) {
  if (!config_.stochastic()) return 0.0;
  return temperature_update(sample_policy(actor_, batch.states).log_prob);
}

template <typename Scalar>
void Agent<Scalar>::polyak_update() {
  polyak_update(config_.tau);
}

template <typename Scalar>
void Agent<Scalar>::polyak_update(double tau) {
  const auto t = static_cast<Scalar>(tau);
  auto blend = [t](const Mlp<Scalar>& online, Mlp<Scalar>& target) {
    target.params() = t * online.params() + (Scalar(1) - t) * target.params();
  };
  for (std::size_t i = 0; i < critics_.size(); ++i) blend(critics_[i], critic_targets_[i]);
  if (config_.has_actor_target()) blend(actor_, actor_target_);
  ++target_updates_;
}

template <typename Scalar>
Diagnostics Agent<Scalar>::train_step(ReplayBuffer<Scalar>& buffer) {
  Diagnostics d;
  if (buffer.size() < static_cast<std::size_t>(config_.batch_size)) return d;

  const Batch<Scalar> batch = buffer.sample(static_cast<std::size_t>(config_.batch_size));
  const CriticLosses c = critic_update(batch);
  d.updated = true;
  d.critic_loss_1 = c.q1;
  d.critic_loss_2 = c.q2;
  d.mean_q = c.mean_q;

  ++train_steps_;
  if (train_steps_ % config_.update_interval == 0) {
    const ActorStep<Scalar> a = actor_update(batch);
    d.actor_updated = true;
    d.actor_loss = a.loss;
    if (config_.stochastic()) d.alpha_loss = temperature_update(a.log_prob);
    polyak_update();
  }
  d.alpha = alpha();
  return d;
}

template <typename Scalar>
void Agent<Scalar>::save(BinaryWriter& w) const {
  w.str("agent");
  w.str(to_string(config_.algorithm));
  w.u32(static_cast<std::uint32_t>(obs_dim_));
  w.u32(static_cast<std::uint32_t>(act_dim_));
  slicerl::save(w, actor_);
  slicerl::save(w, actor_opt_);
  w.u8(config_.has_actor_target() ? 1 : 0);
  if (config_.has_actor_target()) slicerl::save(w, actor_target_);
  w.u32(static_cast<std::uint32_t>(critics_.size()));
  for (std::size_t i = 0; i < critics_.size(); ++i) {
    slicerl::save(w, critics_[i]);
    slicerl::save(w, critic_targets_[i]);
    slicerl::save(w, critic_opts_[i]);
  }
  w.array(log_alpha_);
  slicerl::save(w, alpha_opt_);
  w.array(ou_state_);
  w.i64(train_steps_);
  w.i64(critic_updates_);
  w.i64(actor_updates_);
  w.i64(target_updates_);
  w.str(rng_.save());
}

template <typename Scalar>
void Agent<Scalar>::load(BinaryReader& r) {
  if (r.str() != "agent") throw std::runtime_error("checkpoint: expected an agent record");
  if (algorithm_from_string(r.str()) != config_.algorithm)
    throw std::runtime_error("checkpoint: algorithm mismatch");
  if (static_cast<int>(r.u32()) != obs_dim_ || static_cast<int>(r.u32()) != act_dim_)
    throw std::runtime_error("checkpoint: agent dimension mismatch");
  actor_ = load_mlp<Scalar>(r);
  actor_opt_ = load_adam<Scalar>(r);
  if (r.u8() != 0) actor_target_ = load_mlp<Scalar>(r);
  const auto n = r.u32();
  if (n != critics_.size()) throw std::runtime_error("checkpoint: critic count mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    critics_[i] = load_mlp<Scalar>(r);
    critic_targets_[i] = load_mlp<Scalar>(r);
    critic_opts_[i] = load_adam<Scalar>(r);
  }
  log_alpha_ = r.array<Vector>();
  alpha_opt_ = load_adam<Scalar>(r);
  ou_state_ = r.array<Vector>();
  train_steps_ = r.i64();
  critic_updates_ = r.i64();
  actor_updates_ = r.i64();
  target_updates_ = r.i64();
  rng_.load(r.str());
}

template class Agent<float>;
template class Agent<double>;

}  // namespace slicerl
