#pragma once

#include <Eigen/Dense>

#include "slicerl/netmodel.hpp"

namespace slicerl {

/// Coefficients of the compute/energy model. CPU quantities are in cores,
/// energies in watts.
struct ComputeModel {
  double theta_hat = 0.2;             // cores per nat of rate
  double c0 = 0.1;                    // constant FFT load, cores
  double delta = 0.01;                // cores per active AP link
  double active_link_epsilon = 1e-9;  // |v_{n,m}| threshold of the step function
  double iota = 1e-26;
  double p_z = 1e9;
  double psi_vnf = 2.0;  // W per deployed VNF instance
  int max_vnfs = 4;
  int max_cpus = 8;
  double vnf_capacity_cores = 2.0;

  void validate() const;
  /// iota * P_z^3, the draw of one active processor.
  double processor_watts() const { return iota * p_z * p_z * p_z; }
};

struct CostBreakdown {
  double baseband_w = 0.0;
  double transmission_w = 0.0;
  double total_w = 0.0;
  double cpu_demand_cores = 0.0;
  int active_cpus = 0;
  int active_vnfs = 0;
  bool over_capacity = false;  // demand above max_cpus cores
};

/// Delta_m = theta_hat R_m + C_0 + delta * #{n : |v_{n,m}| > eps}.
double cpu_fraction(double rate_m, const Eigen::Ref<const Eigen::VectorXcd>& beam_column,
                    const ComputeModel& model);

/// Total network energy: processors and VNFs sized by the core load plus the
/// radiated power of every AP.
CostBreakdown network_energy(const BeamformingSet& beams, const Eigen::VectorXd& cores,
                             const ComputeModel& model);

/// Energy per served user. Throws std::invalid_argument for n_users == 0.
double normalized_cost(const CostBreakdown& breakdown, int n_users);

}  // namespace slicerl
