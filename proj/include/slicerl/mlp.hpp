#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/SpecialFunctions>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "slicerl/rng.hpp"

namespace slicerl {

enum class Activation { relu, gelu };

inline std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "gelu"; }

inline Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "gelu") return Activation::gelu;
  throw std::invalid_argument("unknown activation '" + s + "'");
}

/// Exact GELU, x * Phi(x).
template <typename Scalar>
Scalar gelu(Scalar x) {
  using std::erf;
  return Scalar(0.5) * x * (Scalar(1) + erf(x / Scalar(std::numbers::sqrt2)));
}

template <typename Scalar>
Scalar gelu_derivative(Scalar x) {
  using std::erf;
  using std::exp;
  const Scalar cdf = Scalar(0.5) * (Scalar(1) + erf(x / Scalar(std::numbers::sqrt2)));
  const Scalar pdf = exp(Scalar(-0.5) * x * x) * Scalar(0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
  return cdf + x * pdf;
}

/// Fully-connected network: affine + activation on every hidden layer, plain
/// affine output. Samples are columns, so a batch is an (in x B) matrix.
///
/// Parameters live in one contiguous vector (per layer: column-major weight,
/// then bias) so optimizers, target blending and checkpoints treat the
/// network as a flat array.
template <typename Scalar>
class Mlp {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  /// Values recorded by a forward pass for the backward pass.
  struct Tape {
    std::vector<Matrix> inputs;  // input of every layer
    std::vector<Matrix> pre;     // pre-activation of every hidden layer
  };

  struct Gradients {
    Vector params;
    Matrix input;
  };

  Mlp() = default;

  Mlp(std::vector<int> sizes, Activation activation)
      : sizes_(std::move(sizes)), activation_(activation) {
    if (sizes_.size() < 2) throw std::invalid_argument("Mlp: need input and output widths");
    Eigen::Index total = 0;
    for (std::size_t k = 0; k + 1 < sizes_.size(); ++k) {
      if (sizes_[k] < 1 || sizes_[k + 1] < 1) throw std::invalid_argument("Mlp: widths must be >= 1");
      offsets_.push_back(total);
      total += static_cast<Eigen::Index>(sizes_[k + 1]) * (sizes_[k] + 1);
    }
    params_ = Vector::Zero(total);
  }

  /// Uniform(+-1/sqrt(fan_in)) weights and biases; the last layer is scaled
  /// by `final_scale`.
  void initialize(Rng& rng, double final_scale = 1.0) {
    for (int k = 0; k < n_layers(); ++k) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[static_cast<std::size_t>(k)]));
      const double scale = k + 1 == n_layers() ? final_scale : 1.0;
      auto w = weight(k);
      auto b = bias(k);
      for (Eigen::Index j = 0; j < w.cols(); ++j)
        for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = Scalar(scale * rng.uniform(-bound, bound));
      for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = Scalar(scale * rng.uniform(-bound, bound));
    }
  }

  int n_layers() const { return static_cast<int>(offsets_.size()); }
  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  const std::vector<int>& sizes() const { return sizes_; }
  Activation activation() const { return activation_; }
  Eigen::Index n_params() const { return params_.size(); }

  Vector& params() { return params_; }
  const Vector& params() const { return params_; }

  Eigen::Map<Matrix> weight(int k) {
    return {params_.data() + offsets_[k], rows(k), cols(k)};
  }
  Eigen::Map<const Matrix> weight(int k) const {
    return {params_.data() + offsets_[k], rows(k), cols(k)};
  }
  Eigen::Map<Vector> bias(int k) {
    return {params_.data() + offsets_[k] + rows(k) * cols(k), rows(k)};
  }
  Eigen::Map<const Vector> bias(int k) const {
    return {params_.data() + offsets_[k] + rows(k) * cols(k), rows(k)};
  }

  Matrix forward(const Eigen::Ref<const Matrix>& x) const {
    check_input(x);
    Matrix a = x;
    for (int k = 0; k < n_layers(); ++k) {
      Matrix z = affine(k, a);
      if (k + 1 < n_layers())
        a = activate(z);
      else
        return z;
    }
    return a;
  }

  Matrix forward(const Eigen::Ref<const Matrix>& x, Tape& tape) const {
    check_input(x);
    tape.inputs.resize(static_cast<std::size_t>(n_layers()));
    tape.pre.resize(static_cast<std::size_t>(n_layers() - 1));
    tape.inputs[0] = x;
    for (int k = 0; k + 1 < n_layers(); ++k) {
      auto& z = tape.pre[static_cast<std::size_t>(k)];
      z = affine(k, tape.inputs[static_cast<std::size_t>(k)]);
      tape.inputs[static_cast<std::size_t>(k + 1)] = activate(z);
    }
    return affine(n_layers() - 1, tape.inputs.back());
  }

  /// Reverse-mode pass for a scalar loss whose gradient w.r.t. the output is
  /// `upstream` (out x B). Parameter gradients are summed over the batch.
  Gradients backward(const Tape& tape, const Eigen::Ref<const Matrix>& upstream,
                     bool need_input = true) const {
    if (upstream.rows() != output_dim() || upstream.cols() != tape.inputs.front().cols())
      throw std::invalid_argument("Mlp::backward: upstream shape mismatch");
    Gradients g{Vector(n_params()), Matrix()};
    Matrix delta = upstream;
    for (int k = n_layers() - 1; k >= 0; --k) {
      const auto& in = tape.inputs[static_cast<std::size_t>(k)];
      Eigen::Map<Matrix> gw(g.params.data() + offsets_[k], rows(k), cols(k));
      Eigen::Map<Vector> gb(g.params.data() + offsets_[k] + rows(k) * cols(k), rows(k));
      gw.noalias() = delta * in.transpose();
      gb = delta.rowwise().sum();
      if (k == 0) {
        if (need_input) g.input.noalias() = weight(0).transpose() * delta;
        break;
      }
      Matrix back = weight(k).transpose() * delta;
      delta = back.cwiseProduct(activate_derivative(tape.pre[static_cast<std::size_t>(k - 1)]));
    }
    return g;
  }

  template <typename Other>
  Mlp<Other> cast() const {
    Mlp<Other> out(sizes_, activation_);
    out.params() = params_.template cast<Other>();
    return out;
  }

 private:
  Eigen::Index rows(int k) const { return sizes_[static_cast<std::size_t>(k + 1)]; }
  Eigen::Index cols(int k) const { return sizes_[static_cast<std::size_t>(k)]; }

  void check_input(const Eigen::Ref<const Matrix>& x) const {
    if (x.rows() != input_dim()) throw std::invalid_argument("Mlp::forward: input width mismatch");
  }

  Matrix affine(int k, const Matrix& a) const {
    Matrix z(rows(k), a.cols());
    z.noalias() = weight(k) * a;
    z.colwise() += bias(k);
    return z;
  }

  Matrix activate(const Matrix& z) const {
    if (activation_ == Activation::relu) return z.cwiseMax(Scalar(0));
    const Scalar inv_sqrt2 = Scalar(0.5 * std::numbers::sqrt2);
    return (Scalar(0.5) * z.array() * (Scalar(1) + (z.array() * inv_sqrt2).erf())).matrix();
  }

  Matrix activate_derivative(const Matrix& z) const {
    if (activation_ == Activation::relu) return (z.array() > Scalar(0)).template cast<Scalar>().matrix();
    const Scalar inv_sqrt2 = Scalar(0.5 * std::numbers::sqrt2);
    const Scalar pdf_scale = Scalar(0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
    const auto za = z.array();
    return (Scalar(0.5) * (Scalar(1) + (za * inv_sqrt2).erf()) +
            za * (Scalar(-0.5) * za.square()).exp() * pdf_scale)
        .matrix();
  }

  std::vector<int> sizes_;
  std::vector<Eigen::Index> offsets_;
  Activation activation_ = Activation::relu;
  Vector params_;
};

/// Bias-corrected ADAM moments for one flat parameter vector.
template <typename Scalar>
struct AdamState {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Vector first_moment;
  Vector second_moment;
  long step_count = 0;
  Scalar learning_rate = Scalar(1e-3);
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar epsilon = Scalar(1e-8);

  AdamState() = default;
  AdamState(Eigen::Index n, Scalar lr)
      : first_moment(Vector::Zero(n)), second_moment(Vector::Zero(n)), learning_rate(lr) {}
};

template <typename Scalar>
void adam_step(Eigen::Ref<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> params,
               const Eigen::Ref<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>& grads,
               AdamState<Scalar>& state) {
  if (params.size() != grads.size() || state.first_moment.size() != params.size())
    throw std::invalid_argument("adam_step: shape mismatch");
  state.step_count += 1;
  const auto t = static_cast<Scalar>(state.step_count);
  state.first_moment = state.beta1 * state.first_moment + (Scalar(1) - state.beta1) * grads;
  state.second_moment =
      state.beta2 * state.second_moment + (Scalar(1) - state.beta2) * grads.cwiseAbs2();
  const Scalar c1 = Scalar(1) - std::pow(state.beta1, t);
  const Scalar c2 = Scalar(1) - std::pow(state.beta2, t);
  params.array() -= state.learning_rate * (state.first_moment.array() / c1) /
                    ((state.second_moment.array() / c2).sqrt() + state.epsilon);
}

/// Rescales `grads` so its L2 norm is at most `max_norm`. Returns the norm
/// before clipping.
template <typename Scalar>
Scalar clip_global_norm(Eigen::Ref<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> grads, Scalar max_norm) {
  const Scalar norm = grads.norm();
  if (max_norm > Scalar(0) && norm > max_norm) grads *= max_norm / norm;
  return norm;
}

}  // namespace slicerl
