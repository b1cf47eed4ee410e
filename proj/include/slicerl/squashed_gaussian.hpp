#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

namespace slicerl {

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;
inline constexpr double kSquashEpsilon = 1e-6;

/// tanh(mean + exp(log_std) * xi) with its log-density. Columns are samples.
template <typename Scalar>
struct SquashedSample {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

  Matrix action;
  Matrix pre_tanh;
  RowVector log_prob;
};

template <typename Scalar>
struct SquashedGradients {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> mean;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> log_std;
};

template <typename Derived>
auto clamp_log_std(const Eigen::MatrixBase<Derived>& raw) {
  using Scalar = typename Derived::Scalar;
  return raw.cwiseMax(Scalar(kLogStdMin)).cwiseMin(Scalar(kLogStdMax));
}

/// Reparameterized draw: u = mean + sigma xi, a = tanh(u),
/// log pi(a) = log N(u; mean, sigma) - sum log(1 - tanh(u)^2 + eps).
template <typename Scalar>
SquashedSample<Scalar> sample_squashed_gaussian(
    const Eigen::Ref<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>& mean,
    const Eigen::Ref<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>& log_std,
    const Eigen::Ref<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>& xi) {
  SquashedSample<Scalar> s;
  s.pre_tanh = mean.array() + log_std.array().exp() * xi.array();
  s.action = s.pre_tanh.array().tanh();
  const Scalar half_log_2pi = Scalar(0.5 * std::log(2.0 * std::numbers::pi));
  const auto gaussian = Scalar(-0.5) * xi.array().square() - log_std.array() - half_log_2pi;
  const auto correction = (Scalar(1) - s.action.array().square() + Scalar(kSquashEpsilon)).log();
  s.log_prob = (gaussian - correction).colwise().sum();
  return s;
}

/// Chain rule through the sampler with xi held fixed. `d_action` is dL/da
/// (d x B), `d_log_prob` is dL/dlog pi (1 x B).
template <typename Scalar>
SquashedGradients<Scalar> squashed_gaussian_backward(
    const Eigen::Ref<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>& log_std,
    const Eigen::Ref<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>& xi,
    const SquashedSample<Scalar>& sample,
    const Eigen::Ref<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>& d_action,
    const Eigen::Ref<const Eigen::Matrix<Scalar, 1, Eigen::Dynamic>>& d_log_prob) {
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Array t = sample.action.array();
  const Array one_minus = Scalar(1) - t.square();
  // d/du of -log(1 - tanh(u)^2 + eps)
  const Array dcorr = Scalar(2) * t * one_minus / (one_minus + Scalar(kSquashEpsilon));
  const Array du = d_action.array() * one_minus +
                   dcorr.rowwise() * d_log_prob.array();  // dL/du
  const Array sigma_xi = log_std.array().exp() * xi.array();

  SquashedGradients<Scalar> g;
  g.mean = du.matrix();
  g.log_std = (du * sigma_xi).matrix();
  g.log_std.array().rowwise() -= d_log_prob.array();
  return g;
}

}  // namespace slicerl
