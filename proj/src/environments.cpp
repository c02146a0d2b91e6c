#include "aspic/environments.hpp"

#include <cmath>
#include <random>
#include <string>

#include "aspic/errors.hpp"
#include "aspic/seeding.hpp"

namespace aspic {

namespace {

Eigen::Index idx(std::size_t v) { return static_cast<Eigen::Index>(v); }

std::size_t checked_steps(double dt, double horizon) {
  if (!(dt > 0.0) || !(horizon > 0.0)) {
    throw DomainError("environment: dt and horizon must be positive");
  }
  const double ratio = horizon / dt;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
    throw DomainError("environment: horizon " + std::to_string(horizon) +
                      " is not an integer multiple of dt " + std::to_string(dt));
  }
  return static_cast<std::size_t>(rounded);
}

}  // namespace

Environment::Environment(std::size_t state_dim, std::size_t action_dim, double dt, double horizon,
                         double nu, Eigen::VectorXd initial_state)
    : state_dim_(state_dim),
      action_dim_(action_dim),
      dt_(dt),
      horizon_(horizon),
      nu_(nu),
      steps_(checked_steps(dt, horizon)),
      initial_state_(std::move(initial_state)) {
  if (!(nu_ > 0.0)) throw DomainError("environment: nu must be positive");
  if (initial_state_.size() != idx(state_dim_)) {
    throw StructuralError("environment: initial state has wrong dimension");
  }
}

void Environment::step(ConstVectorRef x, ConstVectorRef a, std::size_t k, VectorRef next) const {
  derivative(x, a, static_cast<double>(k) * dt_, next);
  next = x + dt_ * next;
  for (Eigen::Index i = 0; i < next.size(); ++i) {
    if (!std::isfinite(next[i]) || std::abs(next[i]) > kBlowUpThreshold) {
      throw RolloutError(id() + ": state diverged at step " + std::to_string(k) +
                             " (component " + std::to_string(i) + " = " +
                             std::to_string(next[i]) + ")",
                         k);
    }
  }
}

Eigen::VectorXd Environment::step(ConstVectorRef x, ConstVectorRef a, std::size_t k) const {
  Eigen::VectorXd next(idx(state_dim_));
  step(x, a, k, next);
  return next;
}

std::size_t Environment::grid_index(double t) const {
  const double r = std::round(t / dt_);
  if (r < 0.0) throw DomainError("environment: negative event time");
  return static_cast<std::size_t>(r);
}

// ---------------------------------------------------------------------------

LqViapoints::LqViapoints(LqViapointsParams params)
    : Environment(1, 1, params.dt, params.horizon, params.nu,
                  Eigen::VectorXd::Constant(1, params.x0)),
      params_(std::move(params)),
      targets_(steps() + 1) {
  if (!(params_.sigma > 0.0)) throw DomainError("lq_viapoints: sigma must be positive");
  for (const auto& vp : params_.viapoints) {
    const std::size_t j = grid_index(vp.time);
    if (j > steps()) throw DomainError("lq_viapoints: viapoint after the horizon");
    targets_[j].push_back(vp.position);
  }
}

void LqViapoints::derivative(ConstVectorRef /*x*/, ConstVectorRef a, double /*t*/,
                             VectorRef dx) const {
  dx[0] = a[0];
}

double LqViapoints::event_cost(ConstVectorRef x, std::size_t grid_index) const {
  if (grid_index >= targets_.size()) return 0.0;
  double c = 0.0;
  const double scale = 1.0 / (2.0 * params_.sigma * params_.sigma);
  for (double target : targets_[grid_index]) c += (x[0] - target) * (x[0] - target) * scale;
  return c;
}

// ---------------------------------------------------------------------------

Pendulum::Pendulum(PendulumParams params)
    : Environment(2, 1, params.dt, params.horizon, params.nu,
                  Eigen::Vector2d(params.x0, params.xdot0)),
      params_(params) {}

void Pendulum::derivative(ConstVectorRef x, ConstVectorRef a, double /*t*/, VectorRef dx) const {
  dx[0] = x[1];
  dx[1] = -params_.damping * x[1] - params_.omega0_sq * std::sin(x[0]) + params_.lambda * a[0];
}

double Pendulum::event_cost(ConstVectorRef x, std::size_t grid_index) const {
  if (grid_index != steps()) return 0.0;
  const double height = -std::cos(x[0]);
  return -params_.height_weight * height + params_.velocity_weight * x[1] * x[1];
}

double Pendulum::energy(ConstVectorRef x) const {
  return 0.5 * x[1] * x[1] - params_.omega0_sq * std::cos(x[0]);
}

// ---------------------------------------------------------------------------

Acrobot::Acrobot(AcrobotParams params)
    : Environment(4, 1, params.dt, params.horizon, params.nu, params.x0), params_(params) {}

Acrobot::MassMatrix Acrobot::mass_matrix(ConstVectorRef x) const {
  const auto& p = params_;
  const double c2 = std::cos(x[1]);
  MassMatrix m{};
  m.d11 = p.m1 * p.lc1 * p.lc1 + p.m2 * (p.l1 * p.l1 + p.lc2 * p.lc2 + 2.0 * p.l1 * p.lc2 * c2) +
          p.i1 + p.i2;
  m.d12 = p.m2 * (p.lc2 * p.lc2 + p.l1 * p.lc2 * c2) + p.i2;
  m.d22 = p.m2 * p.lc2 * p.lc2 + p.i2;
  return m;
}

Eigen::Vector2d Acrobot::accelerations(ConstVectorRef x, double a) const {
  const auto& p = params_;
  const double x1 = x[0];
  const double x2 = x[1];
  const double v1 = x[2];
  const double v2 = x[3];
  const double s2 = std::sin(x2);
  const double h1 = -p.m2 * p.l1 * p.lc2 * s2 * (v2 * v2 + 2.0 * v1 * v2);
  const double h2 = p.m2 * p.l1 * p.lc2 * s2 * v1 * v1;
  const double phi2 = p.m2 * p.lc2 * p.gravity * std::cos(x1 + x2);
  const double phi1 = (p.m1 * p.lc1 + p.m2 * p.l1) * p.gravity * std::cos(x1) + phi2;

  const MassMatrix m = mass_matrix(x);
  const double det = m.determinant();
  if (!(det > 0.0)) {
    throw NumericalError("acrobot: singular mass matrix (det = " + std::to_string(det) + ")");
  }
  // [d11 d12; d12 d22] [a1; a2] = [r1; r2]
  const double r1 = -h1 - phi1;
  const double r2 = p.lambda * a - h2 - phi2;
  return {(m.d22 * r1 - m.d12 * r2) / det, (m.d11 * r2 - m.d12 * r1) / det};
}

double Acrobot::tip_height(ConstVectorRef x) const {
  return -params_.l1 * std::cos(x[0]) - params_.l2 * std::cos(x[0] + x[1]);
}

void Acrobot::derivative(ConstVectorRef x, ConstVectorRef a, double /*t*/, VectorRef dx) const {
  const Eigen::Vector2d acc = accelerations(x, a[0]);
  dx[0] = x[2];
  dx[1] = x[3];
  dx[2] = acc[0];
  dx[3] = acc[1];
}

double Acrobot::event_cost(ConstVectorRef x, std::size_t grid_index) const {
  if (grid_index != steps()) return 0.0;
  return -params_.height_weight * tip_height(x) +
         params_.velocity_weight * (x[2] * x[2] + x[3] * x[3]);
}

// ---------------------------------------------------------------------------

Trajectory rollout(const Environment& env, const GaussianPolicy& policy, std::uint64_t seed,
                   const RolloutOptions& opts) {
  const std::size_t steps = env.steps();
  const auto sd = idx(env.state_dim());
  const auto ad = idx(env.action_dim());
  if (policy.action_dim() != env.action_dim()) {
    throw StructuralError("rollout: policy and environment action dimensions differ");
  }
  if (std::abs(policy.variance() - env.nu() / env.dt()) > 1e-12 * policy.variance()) {
    throw StructuralError("rollout: policy variance differs from nu/dt of the environment");
  }

  Trajectory traj;
  traj.states.resize(sd, idx(steps + 1));
  traj.actions.resize(ad, idx(steps));
  traj.noises.resize(ad, idx(steps));
  traj.state_costs.resize(idx(steps));
  traj.logp_policy.resize(idx(steps));
  traj.logp_base.resize(idx(steps));
  traj.states.col(0) = env.initial_state();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double variance = policy.variance();
  const double noise_std = std::sqrt(variance) * opts.noise_scale;
  const double dt = env.dt();
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(ad);
  Eigen::VectorXd u(ad);

  for (std::size_t k = 0; k < steps; ++k) {
    const auto kk = idx(k);
    const auto x = traj.states.col(kk);
    policy.mean(x, k, u);
    for (Eigen::Index d = 0; d < ad; ++d) traj.noises(d, kk) = noise_std * normal(rng);
    traj.actions.col(kk) = u + traj.noises.col(kk);
    traj.logp_policy[kk] = gaussian_log_density(traj.actions.col(kk), u, variance);
    traj.logp_base[kk] = gaussian_log_density(traj.actions.col(kk), zero, variance);

    env.step(x, traj.actions.col(kk), k, traj.states.col(kk + 1));

    double cost = env.running_cost(x, static_cast<double>(k) * dt) * dt;
    cost += env.event_cost(traj.states.col(kk + 1), k + 1);
    if (k == 0) cost += env.event_cost(x, 0);
    traj.state_costs[kk] = cost;
  }
  return traj;
}

RolloutBatch sample_batch(const Environment& env, const GaussianPolicy& policy, std::size_t n,
                          std::uint64_t seed, double gamma, const RolloutOptions& opts) {
  if (n < 2) throw StructuralError("sample_batch: needs at least two rollouts");
  std::vector<Trajectory> trajectories;
  trajectories.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    try {
      trajectories.push_back(rollout(env, policy, derive_seed(seed, i), opts));
    } catch (const RolloutError& e) {
      throw BatchError("rollout " + std::to_string(i) + " failed: " + e.what(), i);
    }
  }
  return RolloutBatch(std::move(trajectories), gamma);
}

FeatureMap features_for(const std::string& env_id) {
  if (env_id == "lq_viapoints") return lq_features();
  if (env_id == "pendulum") return pendulum_features();
  if (env_id == "acrobot") return acrobot_features();
  throw StructuralError("no feature map for environment '" + env_id + "'");
}

GaussianPolicy make_linear_policy(const Environment& env) {
  auto mean = std::make_shared<TimeVaryingLinearMean>(features_for(env.id()), env.steps(),
                                                      env.action_dim());
  Eigen::VectorXd params = Eigen::VectorXd::Zero(idx(mean->parameter_count()));
  return GaussianPolicy(std::move(mean), std::move(params), env.nu(), env.dt());
}

GaussianPolicy make_mlp_policy(const Environment& env, const std::vector<std::size_t>& hidden,
                               std::uint64_t init_seed) {
  std::vector<std::size_t> sizes{env.state_dim()};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(env.action_dim());
  auto mean = std::make_shared<MlpMean>(std::move(sizes));
  Eigen::VectorXd params = mean->glorot_uniform(init_seed);
  return GaussianPolicy(std::move(mean), std::move(params), env.nu(), env.dt());
}

}  // namespace aspic
