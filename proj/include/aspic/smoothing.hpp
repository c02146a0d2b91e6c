#pragma once

#include <Eigen/Dense>

namespace aspic {

/// Outcome of the smoothing-parameter search for one batch of costs.
struct SmoothingResult {
  double alpha = 0.0;
  Eigen::VectorXd weights;   // normalized, sums to one
  double entropy = 0.0;      // H_N(w) in nats
  double kl_estimate = 0.0;  // log N - H_N(w)
};

/// w_i ∝ exp(-S_i / (gamma + alpha)), stabilized by subtracting min(S).
Eigen::VectorXd normalized_weights(const Eigen::Ref<const Eigen::VectorXd>& costs, double gamma,
                                   double alpha);

/// Shannon entropy -Σ w log w (0 log 0 := 0). Rejects inputs whose sum is off by more than 1e-9.
double weight_entropy(const Eigen::Ref<const Eigen::VectorXd>& weights);

/// Sample-size independent estimate of KL(p*_alpha || p_theta): log N - H_N(w), clamped at 0.
double kl_estimate(const Eigen::Ref<const Eigen::VectorXd>& weights);

/// Weights, entropy and KL estimate at a fixed alpha.
SmoothingResult evaluate_smoothing(const Eigen::Ref<const Eigen::VectorXd>& costs, double gamma,
                                   double alpha);

struct AlphaSearchOptions {
  double relative_tolerance = 1e-3;  // bisection stops once (hi - lo) <= tol * hi
  double ceiling_scale = 1e12;       // alpha_ceiling = ceiling_scale * (max S - min S + 1)
  int max_steps = 400;
};

/// Smallest admissible alpha: 0 when gamma > 0, otherwise 1e-8 * (max S - min S + 1).
double alpha_floor(const Eigen::Ref<const Eigen::VectorXd>& costs, double gamma);

/// Smallest alpha whose KL estimate does not exceed `delta`.
///
/// The KL estimate decreases monotonically in alpha, so the search doubles
/// alpha from the floor until the constraint holds and then bisects the
/// bracket. The returned alpha always satisfies the constraint; when it is
/// above the floor, alpha * (1 - relative_tolerance) violates it.
SmoothingResult find_alpha(const Eigen::Ref<const Eigen::VectorXd>& costs, double gamma,
                           double delta, const AlphaSearchOptions& opts = {});

}  // namespace aspic
