#include "aspic/trajectory.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "aspic/errors.hpp"

namespace aspic {

void Trajectory::validate() const {
  const auto k = state_costs.size();
  if (logp_policy.size() != k || logp_base.size() != k) {
    throw StructuralError("trajectory: state cost and log-prob sequences differ in length (" +
                          std::to_string(k) + ", " + std::to_string(logp_policy.size()) + ", " +
                          std::to_string(logp_base.size()) + ")");
  }
  if (actions.cols() != k || noises.cols() != k || noises.rows() != actions.rows()) {
    throw StructuralError("trajectory: action/noise sequences do not match the step count");
  }
  if (states.size() != 0 && states.cols() != k + 1) {
    throw StructuralError("trajectory: expected " + std::to_string(k + 1) + " states, got " +
                          std::to_string(states.cols()));
  }
}

double stochastic_cost(const Trajectory& traj, double gamma) {
  if (traj.logp_policy.size() != traj.state_costs.size() ||
      traj.logp_base.size() != traj.state_costs.size()) {
    throw StructuralError("stochastic_cost: state cost and log-prob sequences differ in length");
  }
  if (!(gamma >= 0.0)) throw DomainError("stochastic_cost: gamma must be >= 0");
  const double state = traj.state_costs.sum();
  if (gamma == 0.0) return state;
  return state + gamma * (traj.logp_policy - traj.logp_base).sum();
}

RolloutBatch::RolloutBatch(std::vector<Trajectory> trajectories, double gamma)
    : trajectories_(std::move(trajectories)), gamma_(gamma) {
  if (trajectories_.size() < 2) {
    throw StructuralError("rollout batch needs at least two trajectories, got " +
                          std::to_string(trajectories_.size()));
  }
  if (!(gamma_ >= 0.0)) throw DomainError("rollout batch: gamma must be >= 0");
  for (const auto& t : trajectories_) t.validate();
  costs_ = recompute_costs();
}

Eigen::VectorXd RolloutBatch::recompute_costs() const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(trajectories_.size()));
  for (std::size_t i = 0; i < trajectories_.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = stochastic_cost(trajectories_[i], gamma_);
  }
  return out;
}

double batch_mean_cost(const RolloutBatch& batch) {
  const auto& c = batch.stochastic_costs();
  return batch_mean_cost(std::span<const double>(c.data(), static_cast<std::size_t>(c.size())));
}

double batch_mean_cost(std::span<const double> costs) {
  if (costs.empty()) throw StructuralError("batch_mean_cost: empty batch");
  return std::accumulate(costs.begin(), costs.end(), 0.0) / static_cast<double>(costs.size());
}

}  // namespace aspic
