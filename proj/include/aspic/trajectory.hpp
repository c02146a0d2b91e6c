#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace aspic {

/// One rollout on a time grid with `steps()` control steps.
///
/// Per-step sequences (actions, noises, state_costs, logp_*) have one entry
/// per control step k = 0..K-1. `states` additionally holds the final state,
/// so it has K+1 columns: column k is x at grid time k*dt.
///
/// state_costs[k] is the state cost charged to step k: the running cost
/// V(x_k, t_k)*dt plus every delta cost whose grid index snaps to k+1
/// (evaluated at x_{k+1}). A delta cost at grid index 0 is charged to step 0.
struct Trajectory {
  Eigen::MatrixXd states;   // state_dim x (K+1)
  Eigen::MatrixXd actions;  // action_dim x K
  Eigen::MatrixXd noises;   // action_dim x K, actions - policy mean
  Eigen::VectorXd state_costs;
  Eigen::VectorXd logp_policy;
  Eigen::VectorXd logp_base;

  std::size_t steps() const noexcept { return static_cast<std::size_t>(state_costs.size()); }

  /// Throws StructuralError if the sequence lengths disagree.
  void validate() const;
};

/// S^gamma(tau) = sum_k state_costs[k] + gamma * (logp_policy[k] - logp_base[k]).
double stochastic_cost(const Trajectory& traj, double gamma);

/// N >= 2 trajectories together with their cached stochastic costs.
/// Immutable after construction.
class RolloutBatch {
 public:
  RolloutBatch(std::vector<Trajectory> trajectories, double gamma);

  std::size_t size() const noexcept { return trajectories_.size(); }
  double gamma() const noexcept { return gamma_; }
  const std::vector<Trajectory>& trajectories() const noexcept { return trajectories_; }
  const Trajectory& operator[](std::size_t i) const { return trajectories_[i]; }
  const Eigen::VectorXd& stochastic_costs() const noexcept { return costs_; }

  /// Recomputes every S^gamma from the stored sequences.
  Eigen::VectorXd recompute_costs() const;

 private:
  std::vector<Trajectory> trajectories_;
  double gamma_;
  Eigen::VectorXd costs_;
};

double batch_mean_cost(const RolloutBatch& batch);
double batch_mean_cost(std::span<const double> costs);

}  // namespace aspic
