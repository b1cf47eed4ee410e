#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "slicerl/binary_io.hpp"
#include "slicerl/rng.hpp"

namespace slicerl {

struct Transition {
  Eigen::VectorXd state;
  Eigen::VectorXd action;
  double reward = 0.0;
  Eigen::VectorXd next_state;
  bool done = false;
};

/// Column-stacked minibatch.
template <typename Scalar>
struct Batch {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

  Matrix states;
  Matrix actions;
  RowVector rewards;
  Matrix next_states;
  RowVector dones;

  Eigen::Index size() const { return states.cols(); }
};

/// Fixed-capacity FIFO of transitions with uniform sampling (with
/// replacement) over whatever is currently stored.
template <typename Scalar>
class ReplayBuffer {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

  ReplayBuffer(int obs_dim, int act_dim, std::size_t capacity, std::uint64_t seed = 0)
      : obs_dim_(obs_dim), act_dim_(act_dim), capacity_(capacity), rng_(seed) {
    if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
  }

  void add(const Eigen::VectorXd& state, const Eigen::VectorXd& action, double reward,
           const Eigen::VectorXd& next_state, bool done) {
    if (state.size() != obs_dim_ || next_state.size() != obs_dim_ || action.size() != act_dim_)
      throw std::invalid_argument("ReplayBuffer::add: dimension mismatch");
    reserve_for(head_);
    const auto c = static_cast<Eigen::Index>(head_);
    states_.col(c) = state.cast<Scalar>();
    actions_.col(c) = action.cast<Scalar>();
    rewards_(c) = static_cast<Scalar>(reward);
    next_states_.col(c) = next_state.cast<Scalar>();
    dones_(c) = done ? Scalar(1) : Scalar(0);
    head_ = (head_ + 1) % capacity_;
    size_ = std::min(size_ + 1, capacity_);
  }

  void add(const Transition& t) { add(t.state, t.action, t.reward, t.next_state, t.done); }

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  int obs_dim() const { return obs_dim_; }
  int act_dim() const { return act_dim_; }

  /// Storage slot of the i-th oldest transition.
  std::size_t slot(std::size_t i) const {
    if (i >= size_) throw std::out_of_range("ReplayBuffer: index past size");
    return size_ < capacity_ ? i : (head_ + i) % capacity_;
  }

  /// The i-th oldest stored transition.
  Transition at(std::size_t i) const {
    const auto c = static_cast<Eigen::Index>(slot(i));
    return {states_.col(c).template cast<double>(), actions_.col(c).template cast<double>(),
            static_cast<double>(rewards_(c)), next_states_.col(c).template cast<double>(),
            dones_(c) != Scalar(0)};
  }

  /// Storage slots drawn uniformly with replacement.
  std::vector<std::size_t> sample_slots(std::size_t batch) {
    if (size_ == 0) throw std::logic_error("ReplayBuffer::sample: buffer is empty");
    std::vector<std::size_t> idx(batch);
    for (auto& i : idx) i = rng_.index(size_);
    return idx;
  }

  Batch<Scalar> sample(std::size_t batch) { return gather(sample_slots(batch)); }

  Batch<Scalar> gather(const std::vector<std::size_t>& slots) const {
    const auto n = static_cast<Eigen::Index>(slots.size());
    Batch<Scalar> b{Matrix(obs_dim_, n), Matrix(act_dim_, n), RowVector(n), Matrix(obs_dim_, n), RowVector(n)};
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto c = static_cast<Eigen::Index>(slots[static_cast<std::size_t>(j)]);
      b.states.col(j) = states_.col(c);
      b.actions.col(j) = actions_.col(c);
      b.rewards(j) = rewards_(c);
      b.next_states.col(j) = next_states_.col(c);
      b.dones(j) = dones_(c);
    }
    return b;
  }

  Rng& rng() { return rng_; }

  /// Metadata always; transition contents only when `with_contents`.
  void save(BinaryWriter& w, bool with_contents) const {
    w.str("replay");
    w.u32(static_cast<std::uint32_t>(obs_dim_));
    w.u32(static_cast<std::uint32_t>(act_dim_));
    w.u64(capacity_);
    w.u64(size_);
    w.u64(head_);
    w.str(rng_.save());
    w.u8(with_contents ? 1 : 0);
    if (with_contents) {
      const auto used = static_cast<Eigen::Index>(size_);
      w.array(states_.leftCols(used));
      w.array(actions_.leftCols(used));
      w.array(rewards_.leftCols(used));
      w.array(next_states_.leftCols(used));
      w.array(dones_.leftCols(used));
    }
  }

  /// Restores a buffer written by save(). A metadata-only record yields an
  /// empty buffer with the same shape, capacity and random stream.
  static ReplayBuffer load(BinaryReader& r) {
    if (r.str() != "replay") throw std::runtime_error("checkpoint: expected a replay record");
    const int obs = static_cast<int>(r.u32());
    const int act = static_cast<int>(r.u32());
    const auto capacity = r.u64();
    const auto size = r.u64();
    const auto head = r.u64();
    ReplayBuffer b(obs, act, capacity);
    b.rng_.load(r.str());
    if (r.u8() == 0) return b;
    const auto states = r.array<Matrix>();
    const auto actions = r.array<Matrix>();
    const auto rewards = r.array<RowVector>();
    const auto next_states = r.array<Matrix>();
    const auto dones = r.array<RowVector>();
    if (size > 0) b.reserve_for(size - 1);
    const auto used = static_cast<Eigen::Index>(size);
    b.states_.leftCols(used) = states;
    b.actions_.leftCols(used) = actions;
    b.rewards_.leftCols(used) = rewards;
    b.next_states_.leftCols(used) = next_states;
    b.dones_.leftCols(used) = dones;
    b.size_ = size;
    b.head_ = head;
    return b;
  }

 private:
  // Storage grows geometrically up to the capacity.
  void reserve_for(std::size_t slot) {
    const auto have = static_cast<std::size_t>(states_.cols());
    if (slot < have) return;
    const std::size_t want = std::min(capacity_, std::max<std::size_t>(slot + 1, std::max<std::size_t>(1024, 2 * have)));
    const auto n = static_cast<Eigen::Index>(want);
    states_.conservativeResize(obs_dim_, n);
    actions_.conservativeResize(act_dim_, n);
    rewards_.conservativeResize(n);
    next_states_.conservativeResize(obs_dim_, n);
    dones_.conservativeResize(n);
  }

  int obs_dim_;
  int act_dim_;
  std::size_t capacity_;
  std::size_t size_ = 0;
  std::size_t head_ = 0;
  Matrix states_;
  Matrix actions_;
  RowVector rewards_;
  Matrix next_states_;
  RowVector dones_;
  Rng rng_;
};

}  // namespace slicerl
