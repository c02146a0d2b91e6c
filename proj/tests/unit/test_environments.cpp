#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "aspic/environments.hpp"
#include "aspic/errors.hpp"
#include "aspic/seeding.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace aspic;

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::VectorXd scalar(double v) { return Eigen::VectorXd::Constant(1, v); }

class RunningCostEnv final : public Environment {
 public:
  RunningCostEnv() : Environment(1, 1, 0.25, 1.0, 1.0, Eigen::VectorXd::Zero(1)) {}
  std::string id() const override { return "running"; }
  void derivative(ConstVectorRef, ConstVectorRef a, double, VectorRef dx) const override { dx = a; }
  double running_cost(ConstVectorRef, double t) const override { return 1.0 + t; }
  double event_cost(ConstVectorRef, std::size_t grid_index) const override {
    return grid_index == 0 ? 100.0 : (grid_index == 4 ? 1000.0 : 0.0);
  }
};

}  // namespace

TEST_CASE("LQ Euler step") {
  const LqViapoints env;
  CHECK(env.step(scalar(0.0), scalar(1.0), 0)[0] == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(env.steps() == 100);
  CHECK(env.grid_index(5.0) == 50);
}

TEST_CASE("pendulum rests at the bottom") {
  const Pendulum env;
  const Eigen::Vector2d x(0.0, 0.0);
  const Eigen::VectorXd next = env.step(x, scalar(0.0), 0);
  CHECK(next[0] == 0.0);
  CHECK(next[1] == 0.0);
}

TEST_CASE("acrobot gravity terms vanish in the initial configuration") {
  const Acrobot env;
  const Eigen::Vector4d x0 = env.initial_state();
  CHECK(x0[0] == doctest::Approx(-kPi / 2.0).epsilon(1e-16));
  const Eigen::Vector2d acc = env.accelerations(x0, 0.0);
  // cos(-pi/2) evaluates to 6.1e-17 in floating point, not 0.
  CHECK(std::abs(acc[0]) < 1e-12);
  CHECK(std::abs(acc[1]) < 1e-12);
  const Eigen::VectorXd next = env.step(x0, scalar(0.0), 0);
  CHECK((next - x0).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("acrobot accelerations satisfy the equations of motion") {
  const Acrobot env;
  const AcrobotParams& p = env.params();
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  std::uniform_real_distribution<double> vel(-5.0, 5.0);
  std::uniform_real_distribution<double> act(-20.0, 20.0);
  for (int rep = 0; rep < 200; ++rep) {
    const Eigen::Vector4d x(angle(rng), angle(rng), vel(rng), vel(rng));
    const double a = act(rng);
    const Eigen::Vector2d acc = env.accelerations(x, a);
    const double c2 = std::cos(x[1]);
    const double s2 = std::sin(x[1]);
    const double d11 = p.m1 * p.lc1 * p.lc1 + p.m2 * (p.l1 * p.l1 + p.lc2 * p.lc2 + 2 * p.l1 * p.lc2 * c2) + p.i1 + p.i2;
    const double d12 = p.m2 * (p.lc2 * p.lc2 + p.l1 * p.lc2 * c2) + p.i2;
    const double d22 = p.m2 * p.lc2 * p.lc2 + p.i2;
    const double h1 = -p.m2 * p.l1 * p.lc2 * s2 * (x[3] * x[3] + 2 * x[2] * x[3]);
    const double h2 = p.m2 * p.l1 * p.lc2 * s2 * x[2] * x[2];
    const double phi2 = p.m2 * p.lc2 * p.gravity * std::cos(x[0] + x[1]);
    const double phi1 = (p.m1 * p.lc1 + p.m2 * p.l1) * p.gravity * std::cos(x[0]) + phi2;
    CHECK(std::abs(d11 * acc[0] + d12 * acc[1] + h1 + phi1) < 1e-10);
    CHECK(std::abs(d12 * acc[0] + d22 * acc[1] + h2 + phi2 - p.lambda * a) < 1e-10);

    Eigen::Vector4d dx;
    env.derivative(x, scalar(a), 0.0, dx);
    CHECK(dx[0] == x[2]);
    CHECK(dx[1] == x[3]);
    CHECK(dx[2] == acc[0]);
    CHECK(dx[3] == acc[1]);
  }
}

TEST_CASE("acrobot mass matrix is invertible on random states") {
  CHECK(aspic::testing::acrobot_positive_mass_matrices(10000, 2) == 10000);
}

TEST_CASE("pendulum energy drift shrinks linearly in dt") {
  const double x0 = 1.0;
  const double horizon = 3.0;
  const double slope = aspic::testing::energy_drift_slope(x0, horizon);
  const double coarse = aspic::testing::undamped_energy_drift(1e-2, x0, horizon);
  const double fine = aspic::testing::undamped_energy_drift(1e-3, x0, horizon);
  MESSAGE("drift dt=1e-2: " << coarse << ", dt=1e-3: " << fine);
  CHECK(coarse <= slope * 1e-2);
  CHECK(fine <= slope * 1e-3);
  CHECK(coarse / fine > 5.0);
  CHECK(coarse / fine < 20.0);
}

TEST_CASE("environment validation") {
  LqViapointsParams p;
  p.horizon = 1.05;
  CHECK_THROWS_AS(LqViapoints{p}, DomainError);
  p = {};
  p.sigma = 0.0;
  CHECK_THROWS_AS(LqViapoints{p}, DomainError);
  p = {};
  p.viapoints = {{11.0, 0.0}};
  CHECK_THROWS_AS(LqViapoints{p}, DomainError);
  PendulumParams q;
  q.dt = 0.0;
  CHECK_THROWS_AS(Pendulum{q}, DomainError);
  q = {};
  q.nu = -1.0;
  CHECK_THROWS_AS(Pendulum{q}, DomainError);
  CHECK_THROWS_AS(features_for("walker"), StructuralError);
}

TEST_CASE("zero noise and zero policy on LQ") {
  const LqViapoints env;
  const GaussianPolicy pol = make_linear_policy(env);
  RolloutOptions quiet;
  quiet.noise_scale = 0.0;
  const Trajectory t = rollout(env, pol, 5, quiet);
  CHECK(t.states.cwiseAbs().maxCoeff() == 0.0);
  double expect = 0.0;
  for (const Viapoint& v : env.params().viapoints) {
    expect += v.position * v.position / (2.0 * env.params().sigma * env.params().sigma);
  }
  CHECK(expect == doctest::Approx(730000.0));
  CHECK(stochastic_cost(t, 1.0) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("pendulum end cost at rest") {
  const Pendulum env;
  RolloutOptions quiet;
  quiet.noise_scale = 0.0;
  const Trajectory t = rollout(env, make_linear_policy(env), 1, quiet);
  CHECK(t.steps() == 300);
  CHECK(t.state_costs.sum() == doctest::Approx(500.0).epsilon(1e-15));
  CHECK(t.state_costs.head(299).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("acrobot end cost") {
  const Acrobot env;
  Eigen::Vector4d x(0.3, -0.2, 1.0, -2.0);
  const double y = -1.0 * std::cos(0.3) - 2.0 * std::cos(0.1);
  CHECK(env.tip_height(x) == doctest::Approx(y).epsilon(1e-15));
  CHECK(env.event_cost(x, env.steps()) == doctest::Approx(-500.0 * y + 10.0 * 5.0).epsilon(1e-15));
  CHECK(env.event_cost(x, env.steps() - 1) == 0.0);
}

TEST_CASE("running and delta costs follow the accumulation rule") {
  const RunningCostEnv env;
  const GaussianPolicy pol(std::make_shared<TimeVaryingLinearMean>(lq_features(), 4),
                           Eigen::VectorXd::Zero(8), 1.0, 0.25);
  const Trajectory t = rollout(env, pol, 3);
  REQUIRE(t.steps() == 4);
  CHECK(t.state_costs[0] == doctest::Approx(100.0 + 0.25).epsilon(1e-15));
  CHECK(t.state_costs[1] == doctest::Approx(1.25 * 0.25).epsilon(1e-15));
  CHECK(t.state_costs[2] == doctest::Approx(1.5 * 0.25).epsilon(1e-15));
  CHECK(t.state_costs[3] == doctest::Approx(1.75 * 0.25 + 1000.0).epsilon(1e-15));
}

TEST_CASE("rollout invariants and determinism") {
  const Pendulum env;
  const GaussianPolicy pol = make_linear_policy(env).with_params(
      0.5 * aspic::testing::random_vector(1200, 4));
  const Trajectory a = rollout(env, pol, 99);
  const Trajectory b = rollout(env, pol, 99);
  CHECK(a.states == b.states);
  CHECK(a.actions == b.actions);
  CHECK(a.logp_policy == b.logp_policy);
  CHECK_FALSE(rollout(env, pol, 100).noises == a.noises);
  CHECK(a.states.cols() == 301);
  CHECK_NOTHROW(a.validate());
  for (Eigen::Index k = 0; k < 300; ++k) {
    const Eigen::VectorXd u = pol.mean(a.states.col(k), static_cast<std::size_t>(k));
    CHECK(a.actions(0, k) == doctest::Approx(u[0] + a.noises(0, k)).epsilon(1e-14));
    CHECK(a.logp_policy[k] == pol.log_prob(a.actions.col(k), a.states.col(k), static_cast<std::size_t>(k)));
    const Eigen::VectorXd next = env.step(a.states.col(k), a.actions.col(k), static_cast<std::size_t>(k));
    CHECK(next == a.states.col(k + 1));
  }
}

TEST_CASE("log-ratio equals the Girsanov quadratic form") {
  const LqViapoints env;
  const GaussianPolicy pol = make_linear_policy(env).with_params(
      2.0 * aspic::testing::random_vector(200, 8));
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Trajectory t = rollout(env, pol, seed);
    const double ratio = (t.logp_policy - t.logp_base).sum();
    double girsanov = 0.0;
    for (Eigen::Index k = 0; k < 100; ++k) {
      const double u = t.actions(0, k) - t.noises(0, k);
      girsanov += (0.5 * u * u + u * t.noises(0, k)) * env.dt();
    }
    girsanov /= env.nu();
    CHECK(std::abs(ratio - girsanov) <= 1e-10 * std::abs(girsanov));
  }
}

TEST_CASE("noise variance is nu/dt") {
  const LqViapoints env;
  const GaussianPolicy pol = make_linear_policy(env);
  const RolloutBatch batch = sample_batch(env, pol, 1000, 123, 1.0);
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t n = 0;
  for (const auto& t : batch.trajectories()) {
    for (Eigen::Index k = 0; k < t.noises.cols(); ++k) {
      sum += t.noises(0, k);
      sum_sq += t.noises(0, k) * t.noises(0, k);
      ++n;
    }
  }
  REQUIRE(n == 100000);
  const double mean = sum / static_cast<double>(n);
  const double var = sum_sq / static_cast<double>(n) - mean * mean;
  const double truth = env.nu() / env.dt();
  const double se = truth * std::sqrt(2.0 / static_cast<double>(n - 1));
  MESSAGE("var=" << var << " truth=" << truth << " se=" << se);
  CHECK(std::abs(var - truth) <= 3.0 * se);
}

TEST_CASE("batch mean cost standard error shrinks like 1/sqrt(N)") {
  const LqViapoints env;
  const GaussianPolicy pol = make_linear_policy(env);
  const auto spread = [&](std::size_t n) {
    std::vector<double> means;
    for (std::uint64_t s = 0; s < 40; ++s) means.push_back(batch_mean_cost(sample_batch(env, pol, n, 1000 * n + s, 1.0)));
    double m = 0.0;
    for (double v : means) m += v / 40.0;
    double var = 0.0;
    for (double v : means) var += (v - m) * (v - m) / 39.0;
    return std::sqrt(var);
  };
  const double ratio = spread(25) / spread(100);
  MESSAGE("se ratio " << ratio);
  CHECK(ratio > 1.0);
  CHECK(ratio < 4.0);
}

TEST_CASE("sample_batch seeds rollouts by index") {
  const Pendulum env;
  const GaussianPolicy pol = make_linear_policy(env);
  const RolloutBatch batch = sample_batch(env, pol, 3, 77, 1.0);
  const Trajectory second = rollout(env, pol, derive_seed(77, 1));
  CHECK(batch[1].noises == second.noises);
  CHECK_THROWS_AS(sample_batch(env, pol, 1, 77, 1.0), StructuralError);
}

TEST_CASE("blow-up is reported with the rollout index") {
  const LqViapoints env;
  Eigen::VectorXd params = Eigen::VectorXd::Zero(200);
  params[1] = 1e11;  // constant drift of 1e11 per second at step 0
  const GaussianPolicy pol = make_linear_policy(env).with_params(params);
  CHECK_THROWS_AS(rollout(env, pol, 1), RolloutError);
  try {
    sample_batch(env, pol, 4, 1, 1.0);
    FAIL("expected BatchError");
  } catch (const BatchError& e) {
    CHECK(e.index() == 0);
  }
}

TEST_CASE("rollout rejects a mismatched policy") {
  const LqViapoints env;
  const GaussianPolicy wrong_var(std::make_shared<TimeVaryingLinearMean>(lq_features(), 100),
                                 Eigen::VectorXd::Zero(200), 2.0, 0.1);
  CHECK_THROWS_AS(rollout(env, wrong_var, 1), StructuralError);
}

TEST_CASE("MLP policies roll out on every environment") {
  const Pendulum pend;
  const Acrobot acro;
  const LqViapoints lq;
  for (const Environment* env : {static_cast<const Environment*>(&pend), static_cast<const Environment*>(&acro),
                                 static_cast<const Environment*>(&lq)}) {
    const GaussianPolicy pol = make_mlp_policy(*env, {8, 8}, 3);
    CHECK(pol.mean_function().state_dim() == env->state_dim());
    const RolloutBatch batch = sample_batch(*env, pol, 2, 5, 1.0);
    CHECK(batch.stochastic_costs().allFinite());
  }
}
