#pragma once

#include <optional>
#include <string>

#include <Eigen/Dense>

#include "aspic/policies.hpp"
#include "aspic/trajectory.hpp"

namespace aspic {

enum class EstimatorKind { smoothed, direct, pice };

std::string to_string(EstimatorKind kind);
EstimatorKind estimator_from_string(const std::string& name);

/// Ascent direction g used in theta <- theta + eta * F^{-1} g.
struct GradientEstimate {
  Eigen::VectorXd direction;
  EstimatorKind estimator_kind = EstimatorKind::smoothed;
  std::optional<double> alpha_used;
};

/// Σ_i v_i Σ_t ∇_theta log pi_theta(a_t^i | x_t^i, t) for per-trajectory coefficients v.
Eigen::VectorXd weighted_score_sum(const RolloutBatch& batch, const GaussianPolicy& policy,
                                   const Eigen::Ref<const Eigen::VectorXd>& coefficients);

/// (v - mean v) / std v with the population standard deviation floored at 1e-12.
/// Constant input yields the zero vector.
Eigen::VectorXd whiten(const Eigen::Ref<const Eigen::VectorXd>& v);

/// Smoothed-cost estimator. whiten = true: Σ_i ŵ_i Σ_t score with whitened
/// weights (the alpha prefactor is dropped). whiten = false: alpha Σ_i w_i Σ_t score,
/// the negative of the estimated ∇J^alpha.
GradientEstimate smoothed_gradient(const RolloutBatch& batch, const GaussianPolicy& policy,
                                   double alpha, bool whiten);

/// Direct-cost (REINFORCE) estimator, coefficients whiten(-S) or -S / N.
GradientEstimate direct_gradient(const RolloutBatch& batch, const GaussianPolicy& policy,
                                 bool whiten);

/// Cross-entropy estimator Σ_i w_i Σ_t score with w ∝ exp(-S / gamma); requires gamma > 0.
GradientEstimate pice_gradient(const RolloutBatch& batch, const GaussianPolicy& policy);

/// J^alpha = -(gamma + alpha) log( (1/N) Σ exp(-S_i / (gamma + alpha)) ).
double smoothed_cost_value(const RolloutBatch& batch, double alpha);
double smoothed_cost_value(const Eigen::Ref<const Eigen::VectorXd>& costs, double gamma,
                           double alpha);

}  // namespace aspic
