#include "aspic/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "aspic/errors.hpp"

namespace aspic {

Eigen::VectorXd normalized_weights(const Eigen::Ref<const Eigen::VectorXd>& costs, double gamma,
                                   double alpha) {
  const double temperature = gamma + alpha;
  if (!(temperature > 0.0)) {
    throw DomainError("normalized_weights: gamma + alpha must be positive, got " +
                      std::to_string(temperature));
  }
  if (costs.size() == 0) throw StructuralError("normalized_weights: empty cost vector");
  if (!costs.allFinite()) throw DomainError("normalized_weights: non-finite cost");

  const double shift = costs.minCoeff();
  Eigen::VectorXd w = (-(costs.array() - shift) / temperature).exp().matrix();
  w /= w.sum();
  return w;
}

double weight_entropy(const Eigen::Ref<const Eigen::VectorXd>& weights) {
  if (weights.size() == 0) throw StructuralError("weight_entropy: empty weight vector");
  if (!(std::abs(weights.sum() - 1.0) <= 1e-9)) {
    throw DomainError("weight_entropy: weights are not normalized");
  }
  double h = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    const double w = weights[i];
    if (w < 0.0) throw DomainError("weight_entropy: negative weight");
    if (w > 0.0) h -= w * std::log(w);
  }
  if (weights.maxCoeff() == weights.minCoeff()) return std::log(static_cast<double>(weights.size()));
  return h;
}

double kl_estimate(const Eigen::Ref<const Eigen::VectorXd>& weights) {
  const double h = weight_entropy(weights);
  return std::max(0.0, std::log(static_cast<double>(weights.size())) - h);
}

SmoothingResult evaluate_smoothing(const Eigen::Ref<const Eigen::VectorXd>& costs, double gamma,
                                   double alpha) {
  SmoothingResult r;
  r.alpha = alpha;
  r.weights = normalized_weights(costs, gamma, alpha);
  r.entropy = weight_entropy(r.weights);
  r.kl_estimate = std::max(0.0, std::log(static_cast<double>(costs.size())) - r.entropy);
  return r;
}

double alpha_floor(const Eigen::Ref<const Eigen::VectorXd>& costs, double gamma) {
  if (gamma > 0.0) return 0.0;
  return 1e-8 * (costs.maxCoeff() - costs.minCoeff() + 1.0);
}

SmoothingResult find_alpha(const Eigen::Ref<const Eigen::VectorXd>& costs, double gamma,
                           double delta, const AlphaSearchOptions& opts) {
  if (!(delta > 0.0)) throw DomainError("find_alpha: delta must be positive");
  if (costs.size() < 2) throw StructuralError("find_alpha: needs at least two costs");
  if (!(gamma >= 0.0)) throw DomainError("find_alpha: gamma must be >= 0");
  if (!costs.allFinite()) throw DomainError("find_alpha: non-finite cost");

  const double range = costs.maxCoeff() - costs.minCoeff();
  const double floor = alpha_floor(costs, gamma);
  const double ceiling = opts.ceiling_scale * (range + 1.0);

  SmoothingResult at_floor = evaluate_smoothing(costs, gamma, floor);
  if (at_floor.kl_estimate <= delta) return at_floor;

  // Bracket: lo violates the constraint, hi satisfies it.
  double lo = floor;
  double hi = std::max(2.0 * floor, 1e-8 * (range + 1.0));
  SmoothingResult best = evaluate_smoothing(costs, gamma, hi);
  int steps = 0;
  while (best.kl_estimate > delta) {
    if (hi >= ceiling || ++steps > opts.max_steps) {
      throw DomainError("find_alpha: constraint KL <= " + std::to_string(delta) +
                        " unsatisfiable below alpha ceiling " + std::to_string(ceiling));
    }
    lo = hi;
    hi = std::min(2.0 * hi, ceiling);
    best = evaluate_smoothing(costs, gamma, hi);
  }

  while (hi - lo > opts.relative_tolerance * hi && steps++ < opts.max_steps) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    SmoothingResult r = evaluate_smoothing(costs, gamma, mid);
    if (r.kl_estimate <= delta) {
      hi = mid;
      best = std::move(r);
    } else {
      lo = mid;
    }
  }
  return best;
}

}  // namespace aspic
