// Scalar reference evaluators for the radio and cost layers. Plain loops in
// long double, no Eigen algebra, so they share nothing with the library path.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "slicerl/costmodel.hpp"
#include "slicerl/netmodel.hpp"
#include "slicerl/rng.hpp"

namespace oracle {

using cld = std::complex<long double>;
using CMat = std::vector<std::vector<cld>>;  // [row][col]

inline CMat from_eigen(const Eigen::MatrixXcd& m) {
  CMat out(static_cast<std::size_t>(m.rows()), std::vector<cld>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i][j] = cld(m(i, j).real(), m(i, j).imag());
  return out;
}

// Gauss-Jordan with partial pivoting.
inline CMat inverse(CMat a) {
  const std::size_t n = a.size();
  CMat inv(n, std::vector<cld>(n, 0.0L));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0L;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
    if (std::abs(a[p][c]) == 0.0L) throw std::runtime_error("oracle: singular matrix");
    std::swap(a[p], a[c]);
    std::swap(inv[p], inv[c]);
    const cld piv = a[c][c];
    for (std::size_t k = 0; k < n; ++k) {
      a[c][k] /= piv;
      inv[c][k] /= piv;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const cld f = a[r][c];
      for (std::size_t k = 0; k < n; ++k) {
        a[r][k] -= f * a[c][k];
        inv[r][k] -= f * inv[c][k];
      }
    }
  }
  return inv;
}

// v_m = sqrt(p_m) A^-1 h_m / |A^-1 h_m|, A = I + sum_j h_j h_j^H / reg.
inline CMat beams(const CMat& h, const std::vector<long double>& p, long double reg) {
  const std::size_t n = h.size();
  const std::size_t m = n ? h[0].size() : 0;
  CMat a(n, std::vector<cld>(n, 0.0L));
  for (std::size_t i = 0; i < n; ++i) {
    a[i][i] = 1.0L;
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t j = 0; j < m; ++j) a[i][k] += h[i][j] * std::conj(h[k][j]) / reg;
  }
  const CMat ai = inverse(a);
  CMat v(n, std::vector<cld>(m, 0.0L));
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<cld> d(n, 0.0L);
    long double norm2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) d[i] += ai[i][k] * h[k][j];
      norm2 += std::norm(d[i]);
    }
    if (p[j] == 0 || norm2 == 0) continue;
    const long double s = std::sqrt(p[j] / norm2);
    for (std::size_t i = 0; i < n; ++i) v[i][j] = d[i] * s;
  }
  return v;
}

// |h_m^H v_m|^2 / (sum_{j != m} |h_m^H v_j|^2 + noise)
inline long double sinr(const CMat& h, const CMat& v, long double noise, std::size_t m) {
  long double signal = 0, interference = 0;
  for (std::size_t j = 0; j < v[0].size(); ++j) {
    cld inner = 0.0L;
    for (std::size_t i = 0; i < h.size(); ++i) inner += std::conj(h[i][m]) * v[i][j];
    if (j == m)
      signal = std::norm(inner);
    else
      interference += std::norm(inner);
  }
  return signal / (interference + noise);
}

inline long double rate(long double s) { return std::log(1.0L + s); }

inline long double cpu_fraction(long double r, const CMat& v, std::size_t m, const slicerl::ComputeModel& c) {
  int links = 0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (std::abs(v[i][m]) > c.active_link_epsilon) ++links;
  return c.theta_hat * r + c.c0 + c.delta * links;
}

// ceil(cores) processors at iota P_z^3, ceil(cores / per_vnf) VNFs at psi,
// plus every AP's radiated power.
inline long double total_energy(const CMat& v, const std::vector<long double>& cores, const slicerl::ComputeModel& c) {
  long double load = 0;
  for (auto x : cores) load += x;
  long double cpus = std::ceil(load);
  long double vnfs = std::ceil(load / c.vnf_capacity_cores);
  cpus = std::min<long double>(std::max<long double>(cpus, 0), c.max_cpus);
  vnfs = std::min<long double>(std::max<long double>(vnfs, 0), c.max_vnfs);
  const long double pz = c.p_z;
  long double e = cpus * c.iota * pz * pz * pz + vnfs * c.psi_vnf;
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = 0; j < v[i].size(); ++j) e += std::norm(v[i][j]);
  return e;
}

inline double rel_err(long double got, long double want) {
  const long double scale = std::max(std::abs(want), 1e-300L);
  return static_cast<double>(std::abs(got - want) / scale);
}

// Random radio fixture: N APs, M users, desk link budget, per-user powers in (0, P_max].
struct Fixture {
  slicerl::RadioTopology topology;
  slicerl::ChannelMatrix channel;
  Eigen::VectorXd powers;
};

inline Fixture make_fixture(std::uint64_t seed, int n, int m) {
  slicerl::Rng rng(seed);
  Fixture f;
  f.topology.n_aps = n;
  f.topology.n_users_max = m;
  f.topology.distances.resize(n, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < n; ++i) f.topology.distances(i, j) = rng.uniform(0.01, 0.6);
  f.channel = slicerl::draw_channel(f.topology, rng);
  f.powers.resize(m);
  for (int j = 0; j < m; ++j) f.powers(j) = rng.uniform(0.05, 1.0);
  return f;
}

}  // namespace oracle
