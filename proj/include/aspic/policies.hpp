#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace aspic {

using ConstVectorRef = Eigen::Ref<const Eigen::VectorXd>;
using VectorRef = Eigen::Ref<Eigen::VectorXd>;

/// Parametrized action mean u_theta(x, t). Parameters are passed in explicitly
/// so a single mean function can be shared by many policies.
class MeanFunction {
 public:
  virtual ~MeanFunction() = default;

  virtual std::string family() const = 0;
  virtual std::size_t state_dim() const = 0;
  virtual std::size_t action_dim() const = 0;
  virtual std::size_t parameter_count() const = 0;
  /// Shape header used when serializing parameter vectors.
  virtual std::vector<std::size_t> parameter_shape() const = 0;

  virtual void mean(const Eigen::VectorXd& params, ConstVectorRef x, std::size_t step,
                    VectorRef out) const = 0;
  /// out = J y, with J the Jacobian of the mean w.r.t. the parameters.
  virtual void jacobian_product(const Eigen::VectorXd& params, ConstVectorRef x, std::size_t step,
                                ConstVectorRef y, VectorRef out) const = 0;
  /// out += J^T v.
  virtual void jacobian_transpose_product(const Eigen::VectorXd& params, ConstVectorRef x,
                                          std::size_t step, ConstVectorRef v,
                                          VectorRef out) const = 0;
};

/// State feature map phi(x) for the time-varying linear controllers.
struct FeatureMap {
  std::string name;
  std::size_t state_dim = 0;
  std::size_t size = 0;
  std::function<void(ConstVectorRef, VectorRef)> evaluate;
};

/// LQ: [x, 1].
FeatureMap lq_features();
/// Pendulum, state (x, xdot): [cos x, sin x, xdot, 1].
FeatureMap pendulum_features();
/// Acrobot, state (x1, x2, x1dot, x2dot), in the published listing order:
/// [cos x1, sin x2, cos x2, sin x2, sin(x1+x2), cos(x1+x2), x1dot, x2dot, 1].
/// sin x2 appears twice, exactly as printed.
FeatureMap acrobot_features();

/// u_theta(x, t_k) = Theta_k^T phi(x). Coefficients are laid out block by
/// block: block k holds action_dim rows of `features` coefficients, so the
/// parameters of step k occupy [k * block_size(), (k + 1) * block_size()).
class TimeVaryingLinearMean final : public MeanFunction {
 public:
  TimeVaryingLinearMean(FeatureMap features, std::size_t steps, std::size_t action_dim = 1);

  std::string family() const override { return "linear"; }
  std::size_t state_dim() const override { return features_.state_dim; }
  std::size_t action_dim() const override { return action_dim_; }
  std::size_t parameter_count() const override { return steps_ * block_size(); }
  std::vector<std::size_t> parameter_shape() const override {
    return {steps_, action_dim_, features_.size};
  }

  std::size_t steps() const noexcept { return steps_; }
  std::size_t feature_count() const noexcept { return features_.size; }
  std::size_t block_size() const noexcept { return action_dim_ * features_.size; }
  const FeatureMap& feature_map() const noexcept { return features_; }
  void features(ConstVectorRef x, VectorRef out) const { features_.evaluate(x, out); }

  void mean(const Eigen::VectorXd& params, ConstVectorRef x, std::size_t step,
            VectorRef out) const override;
  void jacobian_product(const Eigen::VectorXd& params, ConstVectorRef x, std::size_t step,
                        ConstVectorRef y, VectorRef out) const override;
  void jacobian_transpose_product(const Eigen::VectorXd& params, ConstVectorRef x,
                                  std::size_t step, ConstVectorRef v,
                                  VectorRef out) const override;

 private:
  void check_step(std::size_t step) const;

  FeatureMap features_;
  std::size_t steps_;
  std::size_t action_dim_;
};

/// Fully connected network with tanh hidden layers and a linear output.
/// Parameters are stored layer by layer: weights (row-major, out x in) then biases.
class MlpMean final : public MeanFunction {
 public:
  /// layer_sizes = [input_dim, hidden..., action_dim].
  explicit MlpMean(std::vector<std::size_t> layer_sizes);

  std::string family() const override { return "mlp"; }
  std::size_t state_dim() const override { return sizes_.front(); }
  std::size_t action_dim() const override { return sizes_.back(); }
  std::size_t parameter_count() const override { return parameter_count_; }
  std::vector<std::size_t> parameter_shape() const override { return sizes_; }
  const std::vector<std::size_t>& layer_sizes() const noexcept { return sizes_; }

  /// Glorot-uniform weights, zero biases.
  Eigen::VectorXd glorot_uniform(std::uint64_t seed) const;

  void mean(const Eigen::VectorXd& params, ConstVectorRef x, std::size_t step,
            VectorRef out) const override;
  void jacobian_product(const Eigen::VectorXd& params, ConstVectorRef x, std::size_t step,
                        ConstVectorRef y, VectorRef out) const override;
  void jacobian_transpose_product(const Eigen::VectorXd& params, ConstVectorRef x,
                                  std::size_t step, ConstVectorRef v,
                                  VectorRef out) const override;

 private:
  struct LayerOffsets {
    std::size_t weights;
    std::size_t biases;
  };
  // Post-activation outputs of every layer, index 0 is the input.
  std::vector<Eigen::VectorXd> forward(const Eigen::VectorXd& params, ConstVectorRef x) const;
  void check(const Eigen::VectorXd& params, ConstVectorRef x) const;

  std::vector<std::size_t> sizes_;
  std::vector<LayerOffsets> offsets_;
  std::size_t parameter_count_ = 0;
};

/// Log-density of N(mean, variance * I) at `a`.
double gaussian_log_density(ConstVectorRef a, ConstVectorRef mean, double variance);

/// pi_theta(a | x, t) = N(u_theta(x, t), nu/dt * I). The variance is static and not
/// part of theta. Cheap to copy: the mean function is shared.
class GaussianPolicy {
 public:
  GaussianPolicy(std::shared_ptr<const MeanFunction> mean_fn, Eigen::VectorXd params, double nu,
                 double dt);

  GaussianPolicy with_params(Eigen::VectorXd params) const;

  const MeanFunction& mean_function() const noexcept { return *mean_fn_; }
  const std::shared_ptr<const MeanFunction>& shared_mean_function() const noexcept {
    return mean_fn_;
  }
  const Eigen::VectorXd& params() const noexcept { return params_; }
  std::size_t parameter_count() const noexcept { return mean_fn_->parameter_count(); }
  std::size_t action_dim() const noexcept { return mean_fn_->action_dim(); }
  double nu() const noexcept { return nu_; }
  double dt() const noexcept { return dt_; }
  double variance() const noexcept { return nu_ / dt_; }

  Eigen::VectorXd mean(ConstVectorRef x, std::size_t step) const;
  void mean(ConstVectorRef x, std::size_t step, VectorRef out) const;
  double log_prob(ConstVectorRef a, ConstVectorRef x, std::size_t step) const;

  /// ∇_theta log pi(a | x, t) = (dt/nu) J^T (a - u).
  Eigen::VectorXd score(ConstVectorRef a, ConstVectorRef x, std::size_t step) const;
  /// out += scale * score(a, x, t), without allocating a full parameter vector.
  void accumulate_score(ConstVectorRef a, ConstVectorRef x, std::size_t step, double scale,
                        VectorRef out) const;

  void mean_jacobian_product(ConstVectorRef x, std::size_t step, ConstVectorRef y,
                             VectorRef out) const;
  void mean_jacobian_transpose_product(ConstVectorRef x, std::size_t step, ConstVectorRef v,
                                       VectorRef out) const;

 private:
  std::shared_ptr<const MeanFunction> mean_fn_;
  Eigen::VectorXd params_;
  double nu_;
  double dt_;
};

}  // namespace aspic
