#include "slicerl/sliceenv.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace slicerl {

void SliceSpec::validate() const {
  if (!(sinr_threshold > 0) || !(cpu_threshold > 0))
    throw std::invalid_argument("slice " + id + ": thresholds must be positive");
  if (arrival_rate < 0) throw std::invalid_argument("slice " + id + ": negative arrival rate");
  if (!(penalty_sinr > penalty_cpu))
    throw std::invalid_argument("slice " + id + ": penalty_sinr must exceed penalty_cpu");
  if (penalty_cpu < 0) throw std::invalid_argument("slice " + id + ": negative penalty");
}

void EnvConfig::validate() const {
  radio.validate();
  compute.validate();
  if (slices.empty()) throw std::invalid_argument("env: at least one slice required");
  for (const auto& s : slices) s.validate();
  if (horizon < 1) throw std::invalid_argument("env: horizon must be >= 1");
  if (!(omega_hat > 0)) throw std::invalid_argument("env: omega_hat must be positive");
  if (!(energy_floor_w > 0)) throw std::invalid_argument("env: energy floor must be positive");
  if (!(mean_lifetime_steps >= 1)) throw std::invalid_argument("env: mean lifetime must be >= 1");
  if (!(min_distance_km > 0) || !(max_distance_km > min_distance_km))
    throw std::invalid_argument("env: need 0 < min_distance_km < max_distance_km");
}

double EnvConfig::energy_cap() const {
  if (energy_cap_w > 0) return energy_cap_w;
  return compute.max_cpus * compute.processor_watts() + compute.max_vnfs * compute.psi_vnf +
         radio.n_users_max * radio.p_max_watts;
}

namespace {

std::vector<SliceSpec> default_slices() {
  // A carries the strictest SINR contract and the lightest traffic.
  return {
      {"A", 0.4, 1.5, 1.0, 1.0, 0.4},
      {"B", 0.2, 1.5, 2.0, 1.0, 0.4},
      {"C", 0.1, 1.5, 2.0, 1.0, 0.4},
  };
}

}  // namespace

EnvConfig EnvConfig::desk() {
  EnvConfig c;
  c.radio.n_aps = 4;
  c.radio.n_users_max = 8;
  c.compute.max_cpus = 8;
  c.compute.max_vnfs = 4;
  c.slices = default_slices();
  return c;
}

EnvConfig EnvConfig::paper() {
  EnvConfig c;
  c.radio.n_aps = 20;
  c.radio.n_users_max = 50;
  c.compute.max_cpus = 48;
  c.compute.max_vnfs = 24;
  c.slices = default_slices();
  return c;
}

Violations constraint_indicator(const Eigen::VectorXd& sinr, const Eigen::VectorXd& delta,
                                const std::vector<SliceSpec>& slices,
                                const std::vector<int>& slice_of_user, bool cpu_covered) {
  const auto m = sinr.size();
  if (delta.size() != m || static_cast<Eigen::Index>(slice_of_user.size()) != m)
    throw std::invalid_argument("constraint_indicator: per-user inputs are misaligned");

  Violations v;
  v.sinr.resize(m);
  v.cpu.resize(m);
  v.indicator.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& spec = slices.at(static_cast<std::size_t>(slice_of_user[static_cast<std::size_t>(i)]));
    v.sinr(i) = !(sinr(i) >= spec.sinr_threshold);
    v.cpu(i) = !(delta(i) <= spec.cpu_threshold) || !cpu_covered;
    v.indicator(i) = (v.sinr(i) || v.cpu(i)) ? 1 : 0;
  }
  v.chi = v.indicator.size() > 0 && v.indicator.maxCoeff() > 0 ? 1 : 0;
  return v;
}

double penalty(const Violations& violations, const std::vector<SliceSpec>& slices,
               const std::vector<int>& slice_of_user) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < violations.indicator.size(); ++i) {
    const auto& spec = slices.at(static_cast<std::size_t>(slice_of_user[static_cast<std::size_t>(i)]));
    if (violations.sinr(i))
      total -= spec.penalty_sinr;
    else if (violations.cpu(i))
      total -= spec.penalty_cpu;
  }
  return total;
}

double reward(const CostBreakdown& breakdown, int n_users, double penalties, double omega_hat,
              double energy_floor_w) {
  if (!(omega_hat > 0)) throw std::invalid_argument("reward: omega_hat must be positive");
  if (n_users <= 0) return 0.0;
  const double energy = std::max(breakdown.total_w, energy_floor_w);
  const double r = (static_cast<double>(n_users) / energy + penalties) / omega_hat;
  return std::clamp(r, -1.0, 1.0);
}

SliceEnv::SliceEnv(EnvConfig config) : config_(std::move(config)) {
  config_.validate();
  reset(0);
}

void SliceEnv::admit(int slice) {
  User u;
  u.slice = slice;
  u.distances.resize(config_.radio.n_aps);
  for (auto& d : u.distances) d = rng_.uniform(config_.min_distance_km, config_.max_distance_km);
  state_.users.push_back(std::move(u));
}

Eigen::VectorXd SliceEnv::reset(std::uint64_t seed) {
  rng_.seed(seed);
  const int slices = config_.n_slices();
  state_ = EnvState{};
  state_.arrivals = Eigen::VectorXd::Zero(slices);
  state_.cpu_allocated = Eigen::VectorXd::Zero(slices);
  state_.users_per_slice = Eigen::VectorXd::Zero(slices);
  state_.horizon = config_.horizon;

  // Initial population: slices weighted by their arrival rates.
  std::vector<double> weights;
  for (const auto& s : config_.slices) weights.push_back(s.arrival_rate);
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  const auto initial = 1 + rng_.index(static_cast<std::size_t>(config_.radio.n_users_max));
  for (std::size_t k = 0; k < initial; ++k) {
    int slice = 0;
    if (total > 0) {
      double u = rng_.uniform(0.0, total);
      while (slice + 1 < slices && u >= weights[static_cast<std::size_t>(slice)])
        u -= weights[static_cast<std::size_t>(slice++)];
    } else {
      slice = static_cast<int>(rng_.index(static_cast<std::size_t>(slices)));
    }
    admit(slice);
    state_.users_per_slice(slice) += 1;
  }
  return observation();
}

void SliceEnv::evolve_traffic() {
  const int slices = config_.n_slices();
  const double leave = 1.0 / config_.mean_lifetime_steps;
  std::erase_if(state_.users, [&](const User&) { return rng_.bernoulli(leave); });

  std::vector<int> requests;
  state_.arrivals.setZero();
  for (int l = 0; l < slices; ++l) {
    const int k = rng_.poisson(config_.slices[static_cast<std::size_t>(l)].arrival_rate);
    state_.arrivals(l) = k;
    requests.insert(requests.end(), static_cast<std::size_t>(k), l);
  }
  // interleave requests of different slices before admission
  for (std::size_t i = requests.size(); i > 1; --i) std::swap(requests[i - 1], requests[rng_.index(i)]);
  for (int l : requests) {
    if (static_cast<int>(state_.users.size()) >= config_.radio.n_users_max) break;
    admit(l);
  }

  state_.users_per_slice.setZero();
  for (const auto& u : state_.users) state_.users_per_slice(u.slice) += 1;
}

StepOutcome SliceEnv::step(const Eigen::VectorXd& action) {
  if (action.size() != action_dim())
    throw std::invalid_argument("step: action dimension mismatch");
  if (!action.allFinite() || (action.array().abs() > 1.0).any())
    throw std::invalid_argument("step: raw action outside [-1, 1]");
  if (state_.step >= state_.horizon) throw std::logic_error("step: episode is over, call reset");

  const int slices = config_.n_slices();
  const double capacity = config_.cpu_capacity();

  // (1) vertical CPU scaling o in [-C_Net, C_Z - C_Net]
  const double c_net = state_.cpu_requirement;
  const double scaling = rescale(action(0), -c_net, capacity - c_net);
  const double allocation = std::clamp(c_net + scaling, 0.0, capacity);

  // (2) one beamforming power level per slice, within [0, P_max]
  Eigen::VectorXd slice_power(slices);
  for (int l = 0; l < slices; ++l)
    slice_power(l) = std::clamp(rescale(action(l + 1), 0.0, config_.radio.p_max_watts), 0.0,
                                config_.radio.p_max_watts);

  // (3) arrivals and departures
  evolve_traffic();

  // (4) radio and compute layers
  const auto m = static_cast<Eigen::Index>(state_.users.size());
  RadioTopology topo = config_.radio;
  topo.distances.resize(topo.n_aps, m);
  std::vector<int> slice_of_user(static_cast<std::size_t>(m));
  Eigen::VectorXd powers(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& u = state_.users[static_cast<std::size_t>(i)];
    topo.distances.col(i) = u.distances;
    slice_of_user[static_cast<std::size_t>(i)] = u.slice;
    powers(i) = slice_power(u.slice);
  }
  const ChannelMatrix channel = draw_channel(topo, rng_);
  const BeamformingSet beams = beamform(channel.gains, powers, topo.regularization());

  StepOutcome out;
  StepInfo& info = out.info;
  info.n_users = static_cast<int>(m);
  info.slice_power = slice_power;
  info.allocation_cores = allocation;
  info.sinr = sinr_all(channel.gains, beams, topo.noise_watts());
  info.cpu_demand.resize(m);
  for (Eigen::Index i = 0; i < m; ++i)
    info.cpu_demand(i) = cpu_fraction(rate(info.sinr(i)), beams.vectors.col(i), config_.compute);
  info.demand_cores = info.cpu_demand.sum();

  // The allocated pool is shared in proportion to demand. Demand is processed
  // whether or not it is covered (an uncovered load is a CPU violation, not
  // an energy saving), and every allocated core is powered whether or not
  // it is used: the processors drawn are ceil(max(allocation, demand)).
  auto share = [&](double pool) {
    Eigen::VectorXd cores(m);
    if (m == 0) return cores;
    if (info.demand_cores > 0)
      cores = info.cpu_demand * (pool / info.demand_cores);
    else
      cores.setConstant(pool / static_cast<double>(m));
    return cores;
  };
  const Eigen::VectorXd provisioned = share(allocation);
  const Eigen::VectorXd powered = share(std::max(allocation, info.demand_cores));
  const bool covered = allocation >= info.demand_cores;
  info.cost = network_energy(beams, powered, config_.compute);
  info.cost.cpu_demand_cores = info.demand_cores;
  info.cost.over_capacity = info.demand_cores > capacity;
  info.cpu_utilization = allocation > 0 ? std::min(info.demand_cores, allocation) / allocation : 0.0;

  // per-slice attribution of Eq. (1)
  info.energy_per_slice = Eigen::VectorXd::Zero(slices);
  Eigen::VectorXd slice_cores = Eigen::VectorXd::Zero(slices);
  Eigen::VectorXd slice_powered = Eigen::VectorXd::Zero(slices);
  for (Eigen::Index i = 0; i < m; ++i) {
    const int l = slice_of_user[static_cast<std::size_t>(i)];
    info.energy_per_slice(l) += beams.vectors.col(i).squaredNorm();
    slice_cores(l) += provisioned(i);
    slice_powered(l) += powered(i);
  }
  if (m > 0) {
    const double pool = slice_powered.sum();
    if (pool > 0) {
      info.energy_per_slice += info.cost.baseband_w * slice_powered / pool;
    } else {
      const Eigen::VectorXd by_users = state_.users_per_slice / static_cast<double>(m);
      info.energy_per_slice += info.cost.baseband_w * by_users;
    }
  }

  // (5) constraints, penalties, reward
  info.violations = constraint_indicator(info.sinr, info.cpu_demand, config_.slices, slice_of_user, covered);
  info.penalty = penalty(info.violations, config_.slices, slice_of_user);
  const double normalized_penalty = m > 0 ? info.penalty / static_cast<double>(m) : 0.0;
  out.reward = reward(info.cost, static_cast<int>(m), normalized_penalty, config_.omega_hat,
                      config_.energy_floor_w);

  // state transition
  state_.cpu_allocated = m > 0 ? slice_cores : Eigen::VectorXd::Constant(slices, allocation / slices);
  state_.energy_status_w = info.cost.total_w;
  state_.cpu_requirement = info.demand_cores;
  state_.step += 1;

  // (6) fixed horizon
  out.done = state_.step >= state_.horizon;
  out.truncated = out.done;
  out.observation = observation();
  return out;
}

Eigen::VectorXd SliceEnv::observation() const {
  const int l = config_.n_slices();
  const double users = config_.radio.n_users_max;
  Eigen::VectorXd obs(config_.obs_dim());
  obs.segment(0, l) = state_.arrivals / users;
  obs.segment(l, l) = state_.cpu_allocated / config_.cpu_capacity();
  obs(2 * l) = std::clamp(state_.energy_status_w / config_.energy_cap(), 0.0, 1.0);
  obs.segment(2 * l + 1, l) = state_.users_per_slice / users;
  return obs;
}

EnvState SliceEnv::state() const {
  EnvState s = state_;
  s.rng_state = rng_.save();
  return s;
}

void SliceEnv::restore(const EnvState& state) {
  state_ = state;
  rng_.load(state.rng_state);
}

}  // namespace slicerl
