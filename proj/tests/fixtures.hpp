// Hand-set networks and small agents shared by the agent tests and the
// acceptance runner.
#pragma once

#include <Eigen/Dense>

#include "slicerl/agent.hpp"
#include "slicerl/binary_io.hpp"
#include "slicerl/config.hpp"
#include "slicerl/mlp.hpp"
#include "slicerl/replay_buffer.hpp"
#include "slicerl/rng.hpp"

namespace fixtures {

using namespace slicerl;

// f(x) = c for every input.
template <typename Scalar>
void make_constant(Mlp<Scalar>& net, double c) {
  net.params().setZero();
  net.bias(net.n_layers() - 1)(0) = static_cast<Scalar>(c);
}

// f(x) = x_k, routed through unit 0 of every hidden layer with a +10 shift so
// ReLU stays in its linear part for |x_k| < 10.
template <typename Scalar>
void make_identity_of(Mlp<Scalar>& net, int k) {
  net.params().setZero();
  net.weight(0)(0, k) = Scalar(1);
  net.bias(0)(0) = Scalar(10);
  for (int l = 1; l < net.n_layers(); ++l) net.weight(l)(0, 0) = Scalar(1);
  net.bias(net.n_layers() - 1)(0) = Scalar(-10);
}

inline AgentConfig small_config(Algorithm a) {
  AgentConfig c = AgentConfig::defaults(a);
  c.hidden = {8, 8};
  c.activation = Activation::relu;
  c.batch_size = 16;
  return c;
}

template <typename Scalar>
ReplayBuffer<Scalar> random_buffer(int obs, int act, int n, std::uint64_t seed) {
  ReplayBuffer<Scalar> b(obs, act, static_cast<std::size_t>(n), seed);
  Rng rng(seed + 1);
  for (int k = 0; k < n; ++k) {
    Eigen::VectorXd s(obs), a(act), s2(obs);
    for (auto& x : s) x = rng.uniform(-1, 1);
    for (auto& x : a) x = rng.uniform(-1, 1);
    for (auto& x : s2) x = rng.uniform(-1, 1);
    b.add(s, a, rng.uniform(-1, 1), s2, rng.bernoulli(0.1));
  }
  return b;
}

// A few hundred steps of the desk profile on small networks.
inline RunConfig tiny_run(Algorithm a, long steps = 600) {
  RunConfig c = RunConfig::defaults(Profile::desk, a);
  c.agent.hidden = {16, 16};
  c.agent.batch_size = 32;
  c.max_timesteps = steps;
  c.start_timesteps = 200;
  c.eval_interval = 200;
  c.eval_episodes = 2;
  c.eval_best = 1;
  c.log_interval = 100;
  c.buffer_capacity = 10000;
  return c;
}

// Every parameter, optimizer moment and rng word, as bytes.
inline std::string agent_bytes(const Agent<float>& agent) {
  BinaryWriter w;
  agent.save(w);
  return w.bytes();
}

inline std::string buffer_bytes(const ReplayBuffer<float>& buffer) {
  BinaryWriter w;
  buffer.save(w, true);
  return w.bytes();
}

}  // namespace fixtures
