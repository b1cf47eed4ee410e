#include "slicerl/netmodel.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace slicerl {

void RadioTopology::validate() const {
  if (n_aps < 1) throw std::invalid_argument("topology: n_aps must be >= 1");
  if (n_users_max < 1) throw std::invalid_argument("topology: n_users_max must be >= 1");
  if (!(p_max_watts > 0.0)) throw std::invalid_argument("topology: p_max_watts must be > 0");
  if (distances.size() > 0 && distances.rows() != n_aps)
    throw std::invalid_argument("topology: distance matrix must have n_aps rows");
  if (distances.cols() > n_users_max)
    throw std::invalid_argument("topology: more users than n_users_max");
  if (distances.size() > 0 && !(distances.array() > 0.0).all())
    throw std::invalid_argument("topology: distances must be positive");
  if (shadowing_std_db < 0.0) throw std::invalid_argument("topology: negative shadowing spread");
}

double RadioTopology::noise_watts() const { return dbm_to_watts(noise_dbm); }

double RadioTopology::regularization() const {
  return reg_noise > 0.0 ? reg_noise : noise_watts();
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double path_loss_db(double d_km, LogBase base) {
  if (!(d_km > 0.0)) throw std::domain_error("path_loss_db: distance must be positive");
  const double lg = base == LogBase::binary ? std::log2(d_km) : std::log10(d_km);
  return 148.1 + 37.6 * lg;
}

ChannelMatrix compose_channel(const RadioTopology& topology, const Eigen::MatrixXcd& fading,
                              const Eigen::MatrixXd& shadowing) {
  const auto& d = topology.distances;
  if (fading.rows() != d.rows() || fading.cols() != d.cols() || shadowing.rows() != d.rows() ||
      shadowing.cols() != d.cols())
    throw std::invalid_argument("compose_channel: draw shape does not match distances");

  const double antenna = db_to_linear(topology.antenna_gain_dbi);
  ChannelMatrix out{Eigen::MatrixXcd(d.rows(), d.cols()), fading, shadowing};
  for (Eigen::Index m = 0; m < d.cols(); ++m) {
    for (Eigen::Index n = 0; n < d.rows(); ++n) {
      const double large_scale = std::pow(10.0, -path_loss_db(d(n, m), topology.path_loss_base) / 20.0) *
                                 std::sqrt(antenna * shadowing(n, m));
      out.gains(n, m) = large_scale * fading(n, m);
    }
  }
  return out;
}

ChannelMatrix draw_channel(const RadioTopology& topology, Rng& rng) {
  topology.validate();
  const auto rows = topology.distances.rows();
  const auto cols = topology.distances.cols();
  Eigen::MatrixXcd fading(rows, cols);
  Eigen::MatrixXd shadowing(rows, cols);
  // column-major draw order: fading then shadowing per link
  for (Eigen::Index m = 0; m < cols; ++m) {
    for (Eigen::Index n = 0; n < rows; ++n) {
      fading(n, m) = rng.complex_normal();
      shadowing(n, m) = db_to_linear(rng.normal(0.0, topology.shadowing_std_db));
    }
  }
  return compose_channel(topology, fading, shadowing);
}

BeamformingSet beamform(const Eigen::MatrixXcd& channel, const Eigen::VectorXd& powers,
                        double reg_noise) {
  if (powers.size() != channel.cols())
    throw std::invalid_argument("beamform: one power per user required");
  if (!(reg_noise > 0.0)) throw std::invalid_argument("beamform: regularization must be > 0");
  if (!(powers.array() >= 0.0).all() || !powers.allFinite())
    throw std::invalid_argument("beamform: powers must be finite and non-negative");

  const auto n = channel.rows();
  BeamformingSet out{Eigen::MatrixXcd::Zero(n, channel.cols()), powers};
  if (channel.cols() == 0) return out;

  Eigen::MatrixXcd gram = Eigen::MatrixXcd::Identity(n, n);
  gram.noalias() += channel * channel.adjoint() / reg_noise;
  const Eigen::MatrixXcd directions = gram.llt().solve(channel);

  for (Eigen::Index m = 0; m < channel.cols(); ++m) {
    const double norm = directions.col(m).norm();
    if (powers(m) == 0.0 || norm == 0.0) continue;
    out.vectors.col(m) = directions.col(m) * (std::sqrt(powers(m)) / norm);
  }
  return out;
}

double sinr(const Eigen::MatrixXcd& channel, const BeamformingSet& beams, double noise_w,
            Eigen::Index m) {
  const auto h = channel.col(m);
  double interference = 0.0;
  double signal = 0.0;
  for (Eigen::Index j = 0; j < beams.vectors.cols(); ++j) {
    const double g = std::norm(h.dot(beams.vectors.col(j)));  // dot conjugates h
    if (j == m)
      signal = g;
    else
      interference += g;
  }
  return signal / (interference + noise_w);
}

Eigen::VectorXd sinr_all(const Eigen::MatrixXcd& channel, const BeamformingSet& beams,
                         double noise_w) {
  Eigen::MatrixXd cross = (channel.adjoint() * beams.vectors).cwiseAbs2();
  const Eigen::VectorXd signal = cross.diagonal();
  // summing only the off-diagonal terms; row sum minus signal cancels at high SINR
  cross.diagonal().setZero();
  const Eigen::VectorXd interference = cross.rowwise().sum();
  return signal.array() / (interference.array() + noise_w);
}

double rate(double sinr_value) {
  if (sinr_value < 0.0 || std::isnan(sinr_value))
    throw std::domain_error("rate: SINR must be non-negative");
  return std::log1p(sinr_value);
}

double ap_power(const BeamformingSet& beams, Eigen::Index n) {
  return beams.vectors.row(n).cwiseAbs2().sum();
}

std::string channel_to_text(const Eigen::MatrixXcd& gains) {
  std::string out;
  char line[128];
  for (Eigen::Index n = 0; n < gains.rows(); ++n) {
    for (Eigen::Index m = 0; m < gains.cols(); ++m) {
      std::snprintf(line, sizeof line, "%td %td %.17g %.17g\n", n, m, gains(n, m).real(),
                    gains(n, m).imag());
      out += line;
    }
  }
  return out;
}

Eigen::MatrixXcd channel_from_text(const std::string& text) {
  struct Entry {
    Eigen::Index n, m;
    double re, im;
  };
  std::vector<Entry> entries;
  Eigen::Index rows = 0, cols = 0;
  std::istringstream is(text);
  Entry e{};
  while (is >> e.n >> e.m >> e.re >> e.im) {
    if (e.n < 0 || e.m < 0) throw std::invalid_argument("channel_from_text: negative index");
    entries.push_back(e);
    rows = std::max(rows, e.n + 1);
    cols = std::max(cols, e.m + 1);
  }
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(rows, cols);
  for (const auto& x : entries) out(x.n, x.m) = {x.re, x.im};
  return out;
}

}  // namespace slicerl
