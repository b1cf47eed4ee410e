#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "oracle.hpp"
#include "slicerl/netmodel.hpp"

using namespace slicerl;

TEST_CASE("path loss law") {
  CHECK(path_loss_db(0.6, LogBase::binary) == doctest::Approx(120.39).epsilon(1e-4));
  CHECK(path_loss_db(1.0, LogBase::binary) == doctest::Approx(148.1));
  CHECK(path_loss_db(2.0, LogBase::binary) == doctest::Approx(185.7));
  CHECK(path_loss_db(1.0, LogBase::decimal) == doctest::Approx(148.1));
  CHECK(path_loss_db(0.1, LogBase::decimal) == doctest::Approx(110.5));
  CHECK_THROWS_AS(path_loss_db(0.0, LogBase::decimal), std::domain_error);
  CHECK_THROWS_AS(path_loss_db(-1.0, LogBase::binary), std::domain_error);
}

TEST_CASE("unit conversions") {
  CHECK(dbm_to_watts(-102.0) == doctest::Approx(6.31e-14).epsilon(1e-3));
  CHECK(dbm_to_watts(30.0) == doctest::Approx(1.0));
  CHECK(db_to_linear(10.0) == doctest::Approx(10.0));
  CHECK(db_to_linear(0.0) == 1.0);
}

TEST_CASE("channel composition from explicit draws") {
  RadioTopology t;
  t.n_aps = 2;
  t.n_users_max = 1;
  t.antenna_gain_dbi = 0.0;
  t.distances = Eigen::MatrixXd::Constant(2, 1, 1.0);
  Eigen::MatrixXcd g(2, 1);
  g << std::complex<double>(1, 0), std::complex<double>(0, 2);
  const Eigen::MatrixXd shadow = Eigen::MatrixXd::Ones(2, 1);
  const auto ch = compose_channel(t, g, shadow);
  const double amp = std::pow(10.0, -148.1 / 20.0);
  CHECK(std::abs(ch.gains(0, 0)) == doctest::Approx(amp));
  CHECK(std::abs(ch.gains(1, 0)) == doctest::Approx(2 * amp));
  CHECK(ch.gains(1, 0).real() == doctest::Approx(0.0));

  CHECK_THROWS_AS(compose_channel(t, Eigen::MatrixXcd::Ones(3, 1), shadow), std::invalid_argument);
}

TEST_CASE("channel draws are seeded and unit-variance") {
  RadioTopology t;
  t.distances = Eigen::MatrixXd::Constant(4, 8, 0.3);
  Rng a(9), b(9);
  CHECK(draw_channel(t, a).gains.isApprox(draw_channel(t, b).gains, 0.0));

  Rng r(1);
  double power = 0.0, mean_re = 0.0;
  int n = 0;
  for (int k = 0; k < 2000; ++k) {
    const auto ch = draw_channel(t, r);
    power += ch.fading.cwiseAbs2().sum();
    mean_re += ch.fading.real().sum();
    n += static_cast<int>(ch.fading.size());
  }
  CHECK(power / n == doctest::Approx(1.0).epsilon(0.02));
  CHECK(std::abs(mean_re / n) < 0.02);
}

TEST_CASE("topology validation") {
  RadioTopology t;
  t.distances = Eigen::MatrixXd::Constant(4, 2, 0.2);
  CHECK_NOTHROW(t.validate());
  t.distances(1, 1) = 0.0;
  CHECK_THROWS_AS(t.validate(), std::invalid_argument);
  t.distances = Eigen::MatrixXd::Constant(3, 2, 0.2);
  CHECK_THROWS_AS(t.validate(), std::invalid_argument);
  t.distances = Eigen::MatrixXd::Constant(4, 9, 0.2);
  CHECK_THROWS_AS(t.validate(), std::invalid_argument);
}

TEST_CASE("beam power matches the allotted power") {
  const auto f = oracle::make_fixture(3, 4, 6);
  Eigen::VectorXd p = f.powers;
  p(2) = 0.0;
  const auto beams = beamform(f.channel.gains, p, f.topology.regularization());
  for (Eigen::Index m = 0; m < p.size(); ++m)
    CHECK(beams.vectors.col(m).squaredNorm() == doctest::Approx(p(m)).epsilon(1e-12));
  CHECK(beams.vectors.col(2).isZero(0.0));

  double radiated = 0.0;
  for (Eigen::Index n = 0; n < 4; ++n) radiated += ap_power(beams, n);
  CHECK(radiated == doctest::Approx(p.sum()).epsilon(1e-12));

  CHECK_THROWS_AS(beamform(f.channel.gains, Eigen::VectorXd::Ones(2), 1.0), std::invalid_argument);
  CHECK_THROWS_AS(beamform(f.channel.gains, p, 0.0), std::invalid_argument);
  p(0) = -1.0;
  CHECK_THROWS_AS(beamform(f.channel.gains, p, 1.0), std::invalid_argument);
}

TEST_CASE("single link SINR is p |h|^2 / noise") {
  Eigen::MatrixXcd h(1, 1);
  h(0, 0) = {3e-6, -4e-6};
  Eigen::VectorXd p(1);
  p << 0.5;
  const auto beams = beamform(h, p, 1e-13);
  const double noise = 1e-13;
  CHECK(sinr(h, beams, noise, 0) == doctest::Approx(0.5 * 25e-12 / noise));
}

TEST_CASE("per-user and batched SINR agree with the scalar oracle") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto f = oracle::make_fixture(100 + seed, 3, 3);
    const double reg = f.topology.regularization();
    const double noise = f.topology.noise_watts();
    const auto beams = beamform(f.channel.gains, f.powers, reg);
    const Eigen::VectorXd all = sinr_all(f.channel.gains, beams, noise);

    const auto h = oracle::from_eigen(f.channel.gains);
    std::vector<long double> p(f.powers.data(), f.powers.data() + f.powers.size());
    const auto v = oracle::beams(h, p, reg);
    for (Eigen::Index m = 0; m < 3; ++m) {
      const long double want = oracle::sinr(h, v, noise, static_cast<std::size_t>(m));
      CHECK(oracle::rel_err(all(m), want) < 1e-10);
      CHECK(oracle::rel_err(sinr(f.channel.gains, beams, noise, m), want) < 1e-10);
    }
  }
}

TEST_CASE("rate in nats") {
  CHECK(rate(0.0) == 0.0);
  CHECK(rate(std::exp(1.0) - 1.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(rate(-0.1), std::domain_error);
  CHECK_THROWS_AS(rate(std::nan("")), std::domain_error);
}

TEST_CASE("channel text fixtures round-trip exactly") {
  const auto f = oracle::make_fixture(5, 3, 2);
  const auto back = channel_from_text(channel_to_text(f.channel.gains));
  CHECK(back.rows() == 3);
  CHECK(back.cols() == 2);
  CHECK((back.array() == f.channel.gains.array()).all());
}
