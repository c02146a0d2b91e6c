#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aspic/policies.hpp"
#include "aspic/trajectory.hpp"

namespace aspic {

/// Control-affine system dx = (f(x,t) + g(x,t) a) dt on a uniform grid,
/// integrated with explicit Euler. State costs are either running costs,
/// charged as V(x_k, t_k) * dt, or delta events at fixed grid indices,
/// charged once without a dt factor.
class Environment {
 public:
  /// A rollout aborts once any state component exceeds this magnitude.
  static constexpr double kBlowUpThreshold = 1e8;

  Environment(std::size_t state_dim, std::size_t action_dim, double dt, double horizon, double nu,
              Eigen::VectorXd initial_state);
  virtual ~Environment() = default;

  virtual std::string id() const = 0;

  std::size_t state_dim() const noexcept { return state_dim_; }
  std::size_t action_dim() const noexcept { return action_dim_; }
  double dt() const noexcept { return dt_; }
  double horizon() const noexcept { return horizon_; }
  double nu() const noexcept { return nu_; }
  /// Number of control steps, horizon / dt.
  std::size_t steps() const noexcept { return steps_; }
  const Eigen::VectorXd& initial_state() const noexcept { return initial_state_; }

  /// dx/dt = f(x, t) + g(x, t) a.
  virtual void derivative(ConstVectorRef x, ConstVectorRef a, double t, VectorRef dx) const = 0;

  /// Running state cost rate V(x, t); zero unless overridden.
  virtual double running_cost(ConstVectorRef /*x*/, double /*t*/) const { return 0.0; }
  /// Sum of the delta costs scheduled at `grid_index`, evaluated at state x.
  virtual double event_cost(ConstVectorRef /*x*/, std::size_t /*grid_index*/) const { return 0.0; }

  /// One Euler step x + dt * (f + g a). Throws RolloutError on blow-up.
  void step(ConstVectorRef x, ConstVectorRef a, std::size_t k, VectorRef next) const;
  Eigen::VectorXd step(ConstVectorRef x, ConstVectorRef a, std::size_t k) const;

  /// Grid index of a continuous time, round(t / dt).
  std::size_t grid_index(double t) const;

 private:
  std::size_t state_dim_;
  std::size_t action_dim_;
  double dt_;
  double horizon_;
  double nu_;
  std::size_t steps_;
  Eigen::VectorXd initial_state_;
};

struct Viapoint {
  double time;
  double position;
};

struct LqViapointsParams {
  std::vector<Viapoint> viapoints = {{1, -10}, {2, 10},  {3, -10}, {4, -20}, {5, -100},
                                     {6, -50}, {7, 10},  {8, 20},  {9, 30}};
  double sigma = 0.1;
  double horizon = 10.0;
  double dt = 0.1;
  double nu = 1.0;
  double x0 = 0.0;
};

/// One-dimensional Brownian particle dx = (u + xi) dt that should pass
/// through a list of viapoints; cost (x - x_i)^2 / (2 sigma^2) at each t_i.
class LqViapoints final : public Environment {
 public:
  explicit LqViapoints(LqViapointsParams params = {});

  std::string id() const override { return "lq_viapoints"; }
  const LqViapointsParams& params() const noexcept { return params_; }

  void derivative(ConstVectorRef x, ConstVectorRef a, double t, VectorRef dx) const override;
  double event_cost(ConstVectorRef x, std::size_t grid_index) const override;

 private:
  LqViapointsParams params_;
  std::vector<std::vector<double>> targets_;  // viapoint positions per grid index
};

struct PendulumParams {
  double damping = 0.1;      // c * omega0 [1/s]
  double omega0_sq = 10.0;   // [1/s^2]
  double lambda = 0.2;       // control gain
  double dt = 0.01;
  double horizon = 3.0;
  double nu = 1.0;
  double x0 = 0.0;
  double xdot0 = 0.0;
  double height_weight = 500.0;
  double velocity_weight = 10.0;
};

/// Pendulum swing-up: xddot + c omega0 xdot + omega0^2 sin x = lambda (u + xi),
/// state (x, xdot). End cost -500 Y + 10 xdot^2 with Y = -cos x.
class Pendulum final : public Environment {
 public:
  explicit Pendulum(PendulumParams params = {});

  std::string id() const override { return "pendulum"; }
  const PendulumParams& params() const noexcept { return params_; }

  void derivative(ConstVectorRef x, ConstVectorRef a, double t, VectorRef dx) const override;
  double event_cost(ConstVectorRef x, std::size_t grid_index) const override;

  /// E = xdot^2 / 2 - omega0^2 cos x (conserved when damping and control vanish).
  double energy(ConstVectorRef x) const;

 private:
  PendulumParams params_;
};

struct AcrobotParams {
  double gravity = 9.8;
  double l1 = 1.0;
  double l2 = 2.0;
  double m1 = 1.0;
  double m2 = 1.0;
  double lc1 = 0.5;
  double lc2 = 1.0;
  double i1 = 0.083;
  double i2 = 0.33;
  double lambda = 0.2;
  double dt = 0.01;
  double horizon = 3.0;
  double nu = 1.0;
  Eigen::Vector4d x0 = {-0.5 * 3.14159265358979323846, 0.0, 0.0, 0.0};
  double height_weight = 500.0;
  double velocity_weight = 10.0;
};

/// Two-link acrobot actuated at the elbow, state (x1, x2, x1dot, x2dot).
class Acrobot final : public Environment {
 public:
  struct MassMatrix {
    double d11, d12, d22;
    double determinant() const noexcept { return d11 * d22 - d12 * d12; }
  };

  explicit Acrobot(AcrobotParams params = {});

  std::string id() const override { return "acrobot"; }
  const AcrobotParams& params() const noexcept { return params_; }

  MassMatrix mass_matrix(ConstVectorRef x) const;
  /// Angular accelerations for a given action, from the 2x2 mass-matrix system.
  Eigen::Vector2d accelerations(ConstVectorRef x, double a) const;
  /// Y = -l1 cos x1 - l2 cos(x1 + x2).
  double tip_height(ConstVectorRef x) const;

  void derivative(ConstVectorRef x, ConstVectorRef a, double t, VectorRef dx) const override;
  double event_cost(ConstVectorRef x, std::size_t grid_index) const override;

 private:
  AcrobotParams params_;
};

struct RolloutOptions {
  /// Multiplies every noise sample; 0 yields deterministic rollouts.
  double noise_scale = 1.0;
};

/// Simulates one trajectory under `policy`, drawing xi ~ N(0, nu/dt) i.i.d.
/// per step and action dimension from a generator seeded with `seed`.
/// Logs log pi_theta and the base policy log pi_0 = N(0, nu/dt) per step.
Trajectory rollout(const Environment& env, const GaussianPolicy& policy, std::uint64_t seed,
                   const RolloutOptions& opts = {});

/// N rollouts, rollout i seeded with derive_seed(seed, i).
/// A failing rollout raises BatchError carrying its index.
RolloutBatch sample_batch(const Environment& env, const GaussianPolicy& policy, std::size_t n,
                          std::uint64_t seed, double gamma, const RolloutOptions& opts = {});

/// Time-varying linear policy over the environment's standard features, theta = 0.
GaussianPolicy make_linear_policy(const Environment& env);
/// MLP policy with tanh hidden layers and Glorot-uniform initialization.
GaussianPolicy make_mlp_policy(const Environment& env, const std::vector<std::size_t>& hidden,
                               std::uint64_t init_seed);
/// Standard feature map for an environment id.
FeatureMap features_for(const std::string& env_id);

}  // namespace aspic
