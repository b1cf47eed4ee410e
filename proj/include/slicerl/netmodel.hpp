#pragma once

#include <Eigen/Dense>
#include <string>

#include "slicerl/rng.hpp"

namespace slicerl {

/// Logarithm base used in the path-loss law 148.1 + 37.6 log(d).
enum class LogBase { binary = 2, decimal = 10 };

/// Static radio layout plus the link-budget constants of the simulation.
///
/// `distances` is N x M for the users currently attached (M may be below
/// `n_users_max`). All power quantities are linear watts except where the
/// field name says dB/dBm.
struct RadioTopology {
  int n_aps = 4;
  int n_users_max = 8;
  Eigen::MatrixXd distances;  // km, N x M
  double antenna_gain_dbi = 9.0;
  double shadowing_std_db = 8.0;
  double noise_dbm = -102.0;
  double bandwidth_hz = 10e6;
  double p_max_watts = 1.0;
  double reg_noise = -1.0;  // beamformer regularization; negative means "use noise power"
  LogBase path_loss_base = LogBase::decimal;

  void validate() const;
  double noise_watts() const;
  double regularization() const;
};

/// Channel realization. Columns are the per-user vectors h_m; the fading and
/// shadowing draws that produced them are kept for inspection.
struct ChannelMatrix {
  Eigen::MatrixXcd gains;      // N x M
  Eigen::MatrixXcd fading;     // g_{n,m} ~ CN(0, 1)
  Eigen::MatrixXd shadowing;   // linear Theta_{n,m}

  Eigen::Index n_aps() const { return gains.rows(); }
  Eigen::Index n_users() const { return gains.cols(); }
};

struct BeamformingSet {
  Eigen::MatrixXcd vectors;  // N x M, column m is v_m
  Eigen::VectorXd powers;    // p_m, watts
};

double db_to_linear(double db);
double dbm_to_watts(double dbm);

/// 148.1 + 37.6 log_b(d) in dB. Throws std::domain_error for d <= 0.
double path_loss_db(double d_km, LogBase base);

/// Assembles h_{n,m} = 10^{-L(d)/20} sqrt(gain * shadowing) g from explicit draws.
ChannelMatrix compose_channel(const RadioTopology& topology, const Eigen::MatrixXcd& fading,
                              const Eigen::MatrixXd& shadowing);

/// Draws log-normal shadowing and Rayleigh fading for every link.
ChannelMatrix draw_channel(const RadioTopology& topology, Rng& rng);

/// Regularized zero-forcing precoder: v_m = sqrt(p_m) A^{-1} h_m / |A^{-1} h_m|
/// with A = I + sum_j h_j h_j^H / reg_noise.
BeamformingSet beamform(const Eigen::MatrixXcd& channel, const Eigen::VectorXd& powers,
                        double reg_noise);

/// SINR of user m under precoders V.
double sinr(const Eigen::MatrixXcd& channel, const BeamformingSet& beams, double noise_w,
            Eigen::Index m);

/// SINR of every user at once, via the M x M cross-gain matrix H^H V.
Eigen::VectorXd sinr_all(const Eigen::MatrixXcd& channel, const BeamformingSet& beams,
                         double noise_w);

/// log(1 + sinr) in nats. Throws std::domain_error for negative input.
double rate(double sinr_value);

/// Transmit power radiated by AP n: sum_m |v_{n,m}|^2.
double ap_power(const BeamformingSet& beams, Eigen::Index n);

/// Text fixture format: one "n m re im" row per entry, full precision.
std::string channel_to_text(const Eigen::MatrixXcd& gains);
Eigen::MatrixXcd channel_from_text(const std::string& text);

}  // namespace slicerl
