#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "aspic/environments.hpp"
#include "aspic/policies.hpp"
#include "aspic/trajectory.hpp"

namespace aspic::testing {

/// Trajectory whose only content is a per-step cost sequence; both log-prob
/// sequences are zero, so S^gamma = Σ costs for every gamma.
inline Trajectory cost_only_trajectory(const std::vector<double>& state_costs) {
  const auto k = static_cast<Eigen::Index>(state_costs.size());
  Trajectory t;
  t.states = Eigen::MatrixXd::Zero(1, k + 1);
  t.actions = Eigen::MatrixXd::Zero(1, k);
  t.noises = Eigen::MatrixXd::Zero(1, k);
  t.state_costs = Eigen::Map<const Eigen::VectorXd>(state_costs.data(), k);
  t.logp_policy = Eigen::VectorXd::Zero(k);
  t.logp_base = Eigen::VectorXd::Zero(k);
  return t;
}

/// Batch of single-step trajectories with the given total costs.
inline RolloutBatch batch_with_costs(const std::vector<double>& costs, double gamma = 1.0) {
  std::vector<Trajectory> ts;
  for (double c : costs) ts.push_back(cost_only_trajectory({c}));
  return RolloutBatch(std::move(ts), gamma);
}

/// Batch with hand-chosen states: x_t^i ~ N(0, state_scale^2), a = u_theta(x) + noise_scale * z,
/// state costs uniform in [0, cost_scale). Bypasses the dynamics, so every Fisher block
/// sees N distinct states.
inline RolloutBatch random_state_batch(const GaussianPolicy& policy, std::size_t n,
                                       std::size_t steps, std::size_t state_dim,
                                       std::uint64_t seed, double gamma = 1.0,
                                       double noise_scale = 1.0, double state_scale = 1.0,
                                       double cost_scale = 10.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform(0.0, cost_scale);
  const auto ad = static_cast<Eigen::Index>(policy.action_dim());
  const auto k = static_cast<Eigen::Index>(steps);
  const double sd = std::sqrt(policy.variance());
  std::vector<Trajectory> ts;
  for (std::size_t i = 0; i < n; ++i) {
    Trajectory t;
    t.states.resize(static_cast<Eigen::Index>(state_dim), k + 1);
    for (Eigen::Index c = 0; c < t.states.size(); ++c) t.states.data()[c] = state_scale * normal(rng);
    t.actions.resize(ad, k);
    t.noises.resize(ad, k);
    t.state_costs.resize(k);
    t.logp_policy.resize(k);
    t.logp_base.resize(k);
    for (Eigen::Index s = 0; s < k; ++s) {
      const Eigen::VectorXd u = policy.mean(t.states.col(s), static_cast<std::size_t>(s));
      for (Eigen::Index d = 0; d < ad; ++d) t.noises(d, s) = noise_scale * sd * normal(rng);
      t.actions.col(s) = u + t.noises.col(s);
      t.logp_policy[s] = policy.log_prob(t.actions.col(s), t.states.col(s), static_cast<std::size_t>(s));
      t.logp_base[s] = gaussian_log_density(t.actions.col(s), Eigen::VectorXd::Zero(ad), policy.variance());
      t.state_costs[s] = uniform(rng);
    }
    ts.push_back(std::move(t));
  }
  return RolloutBatch(std::move(ts), gamma);
}

/// Time-varying linear policy over LQ features [x, 1] with i.i.d. N(0, scale^2) coefficients.
inline GaussianPolicy random_linear_policy(std::size_t steps, std::uint64_t seed, double scale = 0.5,
                                           double nu = 1.0, double dt = 0.1) {
  auto mean = std::make_shared<TimeVaryingLinearMean>(lq_features(), steps);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::VectorXd p(static_cast<Eigen::Index>(mean->parameter_count()));
  for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = normal(rng);
  return GaussianPolicy(std::move(mean), std::move(p), nu, dt);
}

inline Eigen::VectorXd random_vector(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

inline double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

inline double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.dot(b) / (a.norm() * b.norm());
}

}  // namespace aspic::testing
