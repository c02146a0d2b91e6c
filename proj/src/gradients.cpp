#include "aspic/gradients.hpp"

#include <cmath>
#include <string>

#include "aspic/errors.hpp"
#include "aspic/smoothing.hpp"

namespace aspic {

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::smoothed:
      return "smoothed";
    case EstimatorKind::direct:
      return "direct";
    case EstimatorKind::pice:
      return "pice";
  }
  return "unknown";
}

EstimatorKind estimator_from_string(const std::string& name) {
  if (name == "smoothed") return EstimatorKind::smoothed;
  if (name == "direct") return EstimatorKind::direct;
  if (name == "pice") return EstimatorKind::pice;
  throw DomainError("unknown estimator '" + name + "'");
}

Eigen::VectorXd weighted_score_sum(const RolloutBatch& batch, const GaussianPolicy& policy,
                                   const Eigen::Ref<const Eigen::VectorXd>& coefficients) {
  if (coefficients.size() != static_cast<Eigen::Index>(batch.size())) {
    throw StructuralError("weighted_score_sum: one coefficient per trajectory required");
  }
  Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(policy.parameter_count()));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double c = coefficients[static_cast<Eigen::Index>(i)];
    if (c == 0.0) continue;
    const Trajectory& traj = batch[i];
    for (std::size_t k = 0; k < traj.steps(); ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      policy.accumulate_score(traj.actions.col(kk), traj.states.col(kk), k, c, g);
    }
  }
  if (!g.allFinite()) throw NumericalError("gradient estimate is not finite");
  return g;
}

Eigen::VectorXd whiten(const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() < 2) throw StructuralError("whiten: needs at least two entries");
  const double mean = v.mean();
  Eigen::VectorXd centered = v.array() - mean;
  const double std = std::sqrt(centered.squaredNorm() / static_cast<double>(v.size()));
  if (std == 0.0) return Eigen::VectorXd::Zero(v.size());
  return centered / std::max(std, 1e-12);
}

GradientEstimate smoothed_gradient(const RolloutBatch& batch, const GaussianPolicy& policy,
                                   double alpha, bool whiten_weights) {
  const Eigen::VectorXd w = normalized_weights(batch.stochastic_costs(), batch.gamma(), alpha);
  const Eigen::VectorXd coeff = whiten_weights ? whiten(w) : Eigen::VectorXd(alpha * w);
  return {weighted_score_sum(batch, policy, coeff), EstimatorKind::smoothed, alpha};
}

GradientEstimate direct_gradient(const RolloutBatch& batch, const GaussianPolicy& policy,
                                 bool whiten_costs) {
  const Eigen::VectorXd neg = -batch.stochastic_costs();
  if (!neg.allFinite()) throw DomainError("direct_gradient: non-finite cost");
  const Eigen::VectorXd coeff =
      whiten_costs ? whiten(neg) : Eigen::VectorXd(neg / static_cast<double>(batch.size()));
  return {weighted_score_sum(batch, policy, coeff), EstimatorKind::direct, std::nullopt};
}

GradientEstimate pice_gradient(const RolloutBatch& batch, const GaussianPolicy& policy) {
  if (!(batch.gamma() > 0.0)) throw DomainError("pice_gradient: gamma must be positive");
  const Eigen::VectorXd w = normalized_weights(batch.stochastic_costs(), batch.gamma(), 0.0);
  return {weighted_score_sum(batch, policy, w), EstimatorKind::pice, 0.0};
}

double smoothed_cost_value(const Eigen::Ref<const Eigen::VectorXd>& costs, double gamma,
                           double alpha) {
  const double temperature = gamma + alpha;
  if (!(temperature > 0.0)) throw DomainError("smoothed_cost_value: gamma + alpha must be positive");
  if (costs.size() == 0) throw StructuralError("smoothed_cost_value: empty cost vector");
  if (!costs.allFinite()) throw DomainError("smoothed_cost_value: non-finite cost");
  const double shift = costs.minCoeff();
  // log1p/expm1 keep full precision when the exponents are tiny (large alpha).
  const Eigen::ArrayXd z = -(costs.array() - shift) / temperature;
  const double mean_expm1 = z.unaryExpr([](double v) { return std::expm1(v); }).mean();
  return shift - temperature * std::log1p(mean_expm1);
}

double smoothed_cost_value(const RolloutBatch& batch, double alpha) {
  return smoothed_cost_value(batch.stochastic_costs(), batch.gamma(), alpha);
}

}  // namespace aspic
