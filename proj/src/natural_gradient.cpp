#include "aspic/natural_gradient.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "aspic/errors.hpp"

namespace aspic {

namespace {

Eigen::Index idx(std::size_t v) { return static_cast<Eigen::Index>(v); }

const TimeVaryingLinearMean& time_blocked(const GaussianPolicy& policy, const char* who) {
  const auto* linear = dynamic_cast<const TimeVaryingLinearMean*>(&policy.mean_function());
  if (linear == nullptr) {
    throw StructuralError(std::string(who) + ": policy has no per-timestep block structure (" +
                          policy.mean_function().family() + ")");
  }
  return *linear;
}

void check_same_shape(const GaussianPolicy& a, const GaussianPolicy& b) {
  if (a.parameter_count() != b.parameter_count() ||
      a.mean_function().family() != b.mean_function().family() ||
      a.action_dim() != b.action_dim()) {
    throw StructuralError("policy parameter shapes differ");
  }
}

// pinv of a symmetric PSD matrix, discarding eigenvalues below rcond * max eigenvalue.
Eigen::MatrixXd symmetric_pinv(const Eigen::MatrixXd& m, double rcond) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  const Eigen::VectorXd& values = eig.eigenvalues();
  const double largest = values.cwiseAbs().maxCoeff();
  const double cutoff = rcond * largest;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (std::abs(values[i]) > cutoff && values[i] != 0.0) inv[i] = 1.0 / values[i];
  }
  return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

double sample_policy_kl(const RolloutBatch& batch, const GaussianPolicy& policy_old,
                        const GaussianPolicy& policy_new) {
  check_same_shape(policy_old, policy_new);
  if (policy_old.variance() != policy_new.variance()) {
    throw StructuralError("sample_policy_kl: policies must share the action variance");
  }
  const auto ad = idx(policy_old.action_dim());
  Eigen::VectorXd u_old(ad);
  Eigen::VectorXd u_new(ad);
  double total = 0.0;
  for (const Trajectory& traj : batch.trajectories()) {
    for (std::size_t k = 0; k < traj.steps(); ++k) {
      const auto kk = idx(k);
      const auto x = traj.states.col(kk);
      const auto a = traj.actions.col(kk);
      policy_old.mean(x, k, u_old);
      policy_new.mean(x, k, u_new);
      total += (a - u_new).squaredNorm() - (a - u_old).squaredNorm();
    }
  }
  return total / (2.0 * policy_old.variance() * static_cast<double>(batch.size()));
}

Eigen::VectorXd fisher_vector_product(const RolloutBatch& batch, const GaussianPolicy& policy,
                                      const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (y.size() != idx(policy.parameter_count())) {
    throw StructuralError("fisher_vector_product: vector length " + std::to_string(y.size()) +
                          " does not match " + std::to_string(policy.parameter_count()) +
                          " parameters");
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(y.size());
  Eigen::VectorXd jy(idx(policy.action_dim()));
  for (const Trajectory& traj : batch.trajectories()) {
    for (std::size_t k = 0; k < traj.steps(); ++k) {
      const auto x = traj.states.col(idx(k));
      policy.mean_jacobian_product(x, k, y, jy);
      policy.mean_jacobian_transpose_product(x, k, jy, out);
    }
  }
  out /= policy.variance() * static_cast<double>(batch.size());
  return out;
}

double fisher_trace(const RolloutBatch& batch, const GaussianPolicy& policy) {
  const auto ad = idx(policy.action_dim());
  Eigen::VectorXd column = Eigen::VectorXd::Zero(idx(policy.parameter_count()));
  double total = 0.0;
  for (const Trajectory& traj : batch.trajectories()) {
    for (std::size_t k = 0; k < traj.steps(); ++k) {
      const auto x = traj.states.col(idx(k));
      for (Eigen::Index d = 0; d < ad; ++d) {
        column.setZero();
        policy.mean_jacobian_transpose_product(x, k, Eigen::VectorXd::Unit(ad, d), column);
        total += column.squaredNorm();
      }
    }
  }
  return total / (policy.variance() * static_cast<double>(batch.size()));
}

CgResult conjugate_gradient(const LinearOperator& apply_a, const Eigen::VectorXd& b, int max_iters,
                            double tol) {
  if (!b.allFinite()) throw NumericalError("conjugate_gradient: right-hand side is not finite");
  CgResult res;
  res.x = Eigen::VectorXd::Zero(b.size());
  Eigen::VectorXd r = b;
  const double b_norm = b.norm();
  double rr = r.squaredNorm();
  res.residual_norm = std::sqrt(rr);
  if (b_norm == 0.0) return res;
  Eigen::VectorXd p = r;
  for (int it = 0; it < max_iters; ++it) {
    if (std::sqrt(rr) <= tol * b_norm) break;
    const Eigen::VectorXd ap = apply_a(p);
    const double pap = p.dot(ap);
    if (!std::isfinite(pap)) {
      throw NumericalError("conjugate_gradient: non-finite curvature at iteration " +
                           std::to_string(it));
    }
    if (pap <= 0.0) break;  // direction in the null space of A
    const double step = rr / pap;
    res.x += step * p;
    r -= step * ap;
    const double rr_next = r.squaredNorm();
    res.iterations = it + 1;
    if (!res.x.allFinite() || !std::isfinite(rr_next)) {
      throw NumericalError("conjugate_gradient: non-finite iterate at iteration " +
                           std::to_string(it));
    }
    p = r + (rr_next / rr) * p;
    rr = rr_next;
  }
  res.residual_norm = std::sqrt(rr);
  return res;
}

Eigen::MatrixXd fisher_block(const RolloutBatch& batch, const GaussianPolicy& policy,
                             std::size_t step) {
  const auto& linear = time_blocked(policy, "fisher_block");
  if (step >= linear.steps()) throw StructuralError("fisher_block: step outside the horizon");
  const auto nf = idx(linear.feature_count());
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(nf, nf);
  Eigen::VectorXd phi(nf);
  for (const Trajectory& traj : batch.trajectories()) {
    linear.features(traj.states.col(idx(step)), phi);
    block.selfadjointView<Eigen::Lower>().rankUpdate(phi);
  }
  block.triangularView<Eigen::StrictlyUpper>() = block.transpose();
  return block / (policy.variance() * static_cast<double>(batch.size()));
}

namespace {

// Applies `solve_block(F_t, g_block)` to every (timestep, action row) block of g.
template <typename BlockSolver>
Eigen::VectorXd solve_per_timestep(const RolloutBatch& batch, const GaussianPolicy& policy,
                                   const Eigen::Ref<const Eigen::VectorXd>& g, const char* who,
                                   BlockSolver&& solve_block) {
  const auto& linear = time_blocked(policy, who);
  if (g.size() != idx(policy.parameter_count())) {
    throw StructuralError(std::string(who) + ": gradient length does not match the policy");
  }
  for (const auto& traj : batch.trajectories()) {
    if (traj.steps() != linear.steps()) {
      throw StructuralError(std::string(who) + ": batch horizon differs from policy horizon");
    }
  }
  const auto nf = idx(linear.feature_count());
  const auto rows = idx(linear.action_dim());
  Eigen::VectorXd out(g.size());
  for (std::size_t t = 0; t < linear.steps(); ++t) {
    const Eigen::MatrixXd block = fisher_block(batch, policy, t);
    for (Eigen::Index a = 0; a < rows; ++a) {
      const Eigen::Index offset = idx(t * linear.block_size()) + a * nf;
      out.segment(offset, nf) = solve_block(block, Eigen::VectorXd(g.segment(offset, nf)));
    }
  }
  return out;
}

}  // namespace

Eigen::VectorXd per_timestep_natural_direction(const RolloutBatch& batch,
                                               const GaussianPolicy& policy,
                                               const Eigen::Ref<const Eigen::VectorXd>& g,
                                               double rcond) {
  return solve_per_timestep(batch, policy, g, "per_timestep_natural_direction",
                            [rcond](const Eigen::MatrixXd& f, const Eigen::VectorXd& gt) {
                              return Eigen::VectorXd(symmetric_pinv(f, rcond) * gt);
                            });
}

std::string to_string(SolverKind kind) {
  return kind == SolverKind::cg ? "cg" : "per_timestep_pinv";
}

NaturalDirection natural_direction(const RolloutBatch& batch, const GaussianPolicy& policy,
                                   const Eigen::Ref<const Eigen::VectorXd>& g,
                                   const SolverOptions& solver) {
  NaturalDirection nd;
  if (solver.kind == SolverKind::per_timestep_pinv) {
    nd.direction = per_timestep_natural_direction(batch, policy, g, solver.rcond);
    return nd;
  }
  if (solver.blockwise) {
    int max_iters = 0;
    nd.direction = solve_per_timestep(
        batch, policy, g, "blockwise conjugate_gradient",
        [&](const Eigen::MatrixXd& f, const Eigen::VectorXd& gt) {
          const double damping = solver.damping_scale * f.trace() / static_cast<double>(f.rows());
          const auto apply = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
            return f * v + damping * v;
          };
          CgResult r = conjugate_gradient(apply, gt, solver.cg_iterations, solver.cg_tolerance);
          max_iters = std::max(max_iters, r.iterations);
          return r.x;
        });
    nd.cg_iterations = max_iters;
    return nd;
  }
  const double damping = solver.damping_scale * fisher_trace(batch, policy) /
                         static_cast<double>(policy.parameter_count());
  const auto apply = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return fisher_vector_product(batch, policy, v) + damping * v;
  };
  CgResult r = conjugate_gradient(apply, Eigen::VectorXd(g), solver.cg_iterations,
                                  solver.cg_tolerance);
  nd.direction = std::move(r.x);
  nd.cg_iterations = r.iterations;
  return nd;
}

TrustRegionUpdate trust_region_step(const RolloutBatch& batch, const GaussianPolicy& policy,
                                    const Eigen::Ref<const Eigen::VectorXd>& g, double epsilon,
                                    const SolverOptions& solver,
                                    const LineSearchOptions& line_search) {
  if (!(epsilon > 0.0)) throw DomainError("trust_region_step: epsilon must be positive");
  if (g.size() != idx(policy.parameter_count())) {
    throw StructuralError("trust_region_step: gradient length does not match the policy");
  }
  if (!g.allFinite()) throw NumericalError("trust_region_step: gradient is not finite");

  TrustRegionUpdate upd;
  upd.solver_kind = solver.kind;
  upd.new_params = policy.params();

  NaturalDirection nd = natural_direction(batch, policy, g, solver);
  upd.cg_iterations = nd.cg_iterations;
  const Eigen::VectorXd& direction = nd.direction;
  if (!direction.allFinite()) throw NumericalError("trust_region_step: natural direction is not finite");
  if (direction.norm() < 1e-12) return upd;

  double curvature = g.dot(direction);
  if (!(curvature > 0.0)) curvature = direction.dot(fisher_vector_product(batch, policy, direction));
  if (!(curvature > 0.0)) return upd;

  const auto kl_at = [&](double eta) {
    return sample_policy_kl(batch, policy, policy.with_params(policy.params() + eta * direction));
  };
  const double tol = line_search.relative_tolerance * epsilon;
  const auto accept = [&](double eta, double kl) {
    upd.eta = eta;
    upd.achieved_kl = kl;
    upd.new_params = policy.params() + eta * direction;
    if (!upd.new_params.allFinite()) throw NumericalError("trust_region_step: non-finite parameters");
    return upd;
  };

  double eta = std::sqrt(2.0 * epsilon / (curvature + std::numeric_limits<double>::min()));
  double kl = kl_at(eta);
  if (std::abs(kl - epsilon) <= tol) return accept(eta, kl);

  // Bracket [lo, hi] with KL(lo) < epsilon < KL(hi); KL(0) = 0.
  double lo = 0.0;
  double hi = eta;
  int steps = 0;
  if (kl < epsilon) {
    lo = eta;
    for (;;) {
      if (++steps > line_search.max_steps) {
        throw NumericalError("trust_region_step: line search failed to bracket KL = " +
                             std::to_string(epsilon));
      }
      hi = 2.0 * lo;
      kl = kl_at(hi);
      if (std::abs(kl - epsilon) <= tol) return accept(hi, kl);
      if (kl > epsilon) break;
      lo = hi;
    }
  }
  for (;;) {
    if (++steps > line_search.max_steps) {
      throw NumericalError("trust_region_step: line search did not reach |KL - epsilon| <= " +
                           std::to_string(tol));
    }
    const double mid = 0.5 * (lo + hi);
    kl = kl_at(mid);
    if (std::abs(kl - epsilon) <= tol) return accept(mid, kl);
    (kl < epsilon ? lo : hi) = mid;
  }
}

}  // namespace aspic
