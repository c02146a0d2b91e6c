#pragma once

#include <functional>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "aspic/policies.hpp"
#include "aspic/trajectory.hpp"

namespace aspic {

/// KL(old || new) ≈ (1/N) Σ_i Σ_t log pi_old(a|x,t) - log pi_new(a|x,t) on a batch drawn
/// from `policy_old`. Reported raw: small negative values are possible.
double sample_policy_kl(const RolloutBatch& batch, const GaussianPolicy& policy_old,
                        const GaussianPolicy& policy_new);

/// F y with F = (dt/nu) (1/N) Σ_i Σ_t J_u^T J_u, the exact Fisher of a fixed-variance
/// Gaussian policy evaluated on the batch states.
Eigen::VectorXd fisher_vector_product(const RolloutBatch& batch, const GaussianPolicy& policy,
                                      const Eigen::Ref<const Eigen::VectorXd>& y);

/// trace(F), used to scale the conjugate-gradient damping.
double fisher_trace(const RolloutBatch& batch, const GaussianPolicy& policy);

using LinearOperator = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct CgResult {
  Eigen::VectorXd x;
  int iterations = 0;
  double residual_norm = 0.0;
};

/// Truncated conjugate gradient for A x = b, A symmetric positive semi-definite.
/// Stops when ||A x - b|| <= tol * ||b|| or after max_iters iterations.
CgResult conjugate_gradient(const LinearOperator& apply_a, const Eigen::VectorXd& b, int max_iters,
                            double tol);

/// Per-timestep Fisher block (dt/nu)(1/N) Σ_i phi(x_t^i) phi(x_t^i)^T of a time-varying
/// linear policy. Throws StructuralError for policies without time blocks.
Eigen::MatrixXd fisher_block(const RolloutBatch& batch, const GaussianPolicy& policy,
                             std::size_t step);

/// Concatenation over t of pinv(F_t, rcond) g_t. Singular values below rcond * sigma_max
/// are discarded, as in numpy/scipy pinv.
Eigen::VectorXd per_timestep_natural_direction(const RolloutBatch& batch,
                                               const GaussianPolicy& policy,
                                               const Eigen::Ref<const Eigen::VectorXd>& g,
                                               double rcond);

enum class SolverKind { cg, per_timestep_pinv };

std::string to_string(SolverKind kind);

struct SolverOptions {
  SolverKind kind = SolverKind::cg;
  int cg_iterations = 10;
  double cg_tolerance = 1e-10;
  /// Run CG separately on each per-timestep Fisher block (time-varying linear policies only).
  bool blockwise = false;
  /// Damping lambda = damping_scale * trace(F) / dim added to F for CG.
  double damping_scale = 1e-6;
  double rcond = 1e-4;
};

/// Natural direction F^{-1} g with the configured solver.
struct NaturalDirection {
  Eigen::VectorXd direction;
  std::optional<int> cg_iterations;
};
NaturalDirection natural_direction(const RolloutBatch& batch, const GaussianPolicy& policy,
                                   const Eigen::Ref<const Eigen::VectorXd>& g,
                                   const SolverOptions& solver);

struct TrustRegionUpdate {
  Eigen::VectorXd new_params;
  double eta = 0.0;
  double achieved_kl = 0.0;
  std::optional<int> cg_iterations;
  SolverKind solver_kind = SolverKind::cg;
};

struct LineSearchOptions {
  /// Accept once |KL - epsilon| <= relative_tolerance * epsilon.
  double relative_tolerance = 0.1;
  int max_steps = 50;
};

/// theta + eta g_F with eta chosen so that the sample KL(theta || theta + eta g_F) hits
/// epsilon. Starts from the quadratic-model step sqrt(2 epsilon / g^T g_F) and refines by
/// doubling/bisection on the batch already drawn. A vanishing natural direction returns
/// theta unchanged with eta = 0.
TrustRegionUpdate trust_region_step(const RolloutBatch& batch, const GaussianPolicy& policy,
                                    const Eigen::Ref<const Eigen::VectorXd>& g, double epsilon,
                                    const SolverOptions& solver,
                                    const LineSearchOptions& line_search = {});

}  // namespace aspic
