#include "slicerl/costmodel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace slicerl {

void ComputeModel::validate() const {
  if (theta_hat < 0 || c0 < 0 || delta < 0 || active_link_epsilon < 0 || iota < 0 || psi_vnf < 0)
    throw std::invalid_argument("compute model: coefficients must be non-negative");
  if (!(p_z > 0)) throw std::invalid_argument("compute model: p_z must be positive");
  if (max_vnfs < 1 || max_cpus < 1)
    throw std::invalid_argument("compute model: need at least one VNF and one CPU");
  if (!(vnf_capacity_cores > 0))
    throw std::invalid_argument("compute model: vnf_capacity_cores must be positive");
}

double cpu_fraction(double rate_m, const Eigen::Ref<const Eigen::VectorXcd>& beam_column,
                    const ComputeModel& model) {
  const auto active_links =
      (beam_column.cwiseAbs().array() > model.active_link_epsilon).count();
  return model.theta_hat * rate_m + model.c0 + model.delta * static_cast<double>(active_links);
}

CostBreakdown network_energy(const BeamformingSet& beams, const Eigen::VectorXd& cores,
                             const ComputeModel& model) {
  if (cores.size() != beams.vectors.cols())
    throw std::invalid_argument("network_energy: one core load per user required");

  CostBreakdown out;
  out.cpu_demand_cores = std::max(0.0, cores.sum());
  out.over_capacity = out.cpu_demand_cores > static_cast<double>(model.max_cpus);

  const double cpus = std::ceil(out.cpu_demand_cores);
  const double vnfs = std::ceil(out.cpu_demand_cores / model.vnf_capacity_cores);
  out.active_cpus = static_cast<int>(std::clamp(cpus, 0.0, static_cast<double>(model.max_cpus)));
  out.active_vnfs = static_cast<int>(std::clamp(vnfs, 0.0, static_cast<double>(model.max_vnfs)));

  out.baseband_w = out.active_cpus * model.processor_watts() + out.active_vnfs * model.psi_vnf;
  for (Eigen::Index n = 0; n < beams.vectors.rows(); ++n) out.transmission_w += ap_power(beams, n);
  out.total_w = out.baseband_w + out.transmission_w;
  return out;
}

double normalized_cost(const CostBreakdown& breakdown, int n_users) {
  if (n_users < 1) throw std::invalid_argument("normalized_cost: no users to normalize by");
  return breakdown.total_w / n_users;
}

}  // namespace slicerl
