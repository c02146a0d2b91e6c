#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "aspic/environments.hpp"
#include "aspic/gradients.hpp"
#include "aspic/natural_gradient.hpp"
#include "aspic/policies.hpp"

namespace aspic {

/// Smoothing strength, either an absolute KL bound or a multiple of log N.
struct DeltaSpec {
  enum class Mode { absolute, lognfrac };
  Mode mode = Mode::lognfrac;
  double value = 0.2;

  static DeltaSpec absolute(double v) { return {Mode::absolute, v}; }
  static DeltaSpec lognfrac(double c) { return {Mode::lognfrac, c}; }

  double resolve(std::size_t n) const;
};

struct PolicyConfig {
  std::string family = "linear";  // "linear" | "mlp"
  std::vector<std::size_t> hidden = {32, 32};
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::string env_id = "lq_viapoints";
  nlohmann::json env_overrides = nlohmann::json::object();
  PolicyConfig policy;
  std::size_t rollouts = 100;
  std::size_t iterations = 100;
  double epsilon = 0.1;
  DeltaSpec delta;
  double gamma = 1.0;
  EstimatorKind estimator = EstimatorKind::smoothed;
  bool whiten = true;
  SolverOptions solver;
  std::uint64_t seed = 0;
  std::size_t repeats = 1;
  /// Cost level for the iterations-to-threshold metric.
  std::optional<double> threshold;
  /// End a run as soon as the batch mean cost reaches `threshold`.
  bool stop_at_threshold = false;

  /// Throws DomainError / StructuralError on invalid settings.
  void validate() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::string& path);

/// Git blob hash (SHA-1 of "blob <len>\0<canonical json>") of the config.
std::string config_hash(const ExperimentConfig& config);
std::string git_blob_sha1(const std::string& content);

/// Builds an environment from its id and a JSON object of parameter overrides.
/// Unknown ids or override keys are rejected.
std::unique_ptr<Environment> make_environment(const std::string& id,
                                              const nlohmann::json& overrides = nlohmann::json::object());

/// Initial policy for a run; `init_seed` drives MLP weight initialization.
GaussianPolicy make_policy(const PolicyConfig& config, const Environment& env,
                           std::uint64_t init_seed);

/// {"family", "shape", "values"} checkpoint of a parameter vector.
nlohmann::json params_to_json(const GaussianPolicy& policy);
/// Inverse of params_to_json; the shape header must match `mean_fn`.
Eigen::VectorXd params_from_json(const nlohmann::json& j, const MeanFunction& mean_fn);

}  // namespace aspic
