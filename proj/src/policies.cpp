#include "aspic/policies.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "aspic/errors.hpp"

namespace aspic {

namespace {

using RowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using MutableRowMajorMap =
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

Eigen::Index idx(std::size_t v) { return static_cast<Eigen::Index>(v); }

constexpr std::size_t kMaxFeatures = 32;
using FeatureBuffer = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxFeatures, 1>;

}  // namespace

FeatureMap lq_features() {
  return {"lq", 1, 2, [](ConstVectorRef x, VectorRef out) {
            out[0] = x[0];
            out[1] = 1.0;
          }};
}

FeatureMap pendulum_features() {
  return {"pendulum", 2, 4, [](ConstVectorRef x, VectorRef out) {
            out[0] = std::cos(x[0]);
            out[1] = std::sin(x[0]);
            out[2] = x[1];
            out[3] = 1.0;
          }};
}

FeatureMap acrobot_features() {
  return {"acrobot", 4, 9, [](ConstVectorRef x, VectorRef out) {
            const double x1 = x[0];
            const double x2 = x[1];
            out[0] = std::cos(x1);
            out[1] = std::sin(x2);
            out[2] = std::cos(x2);
            out[3] = std::sin(x2);
            out[4] = std::sin(x1 + x2);
            out[5] = std::cos(x1 + x2);
            out[6] = x[2];
            out[7] = x[3];
            out[8] = 1.0;
          }};
}

// ---------------------------------------------------------------------------
// TimeVaryingLinearMean

TimeVaryingLinearMean::TimeVaryingLinearMean(FeatureMap features, std::size_t steps,
                                             std::size_t action_dim)
    : features_(std::move(features)), steps_(steps), action_dim_(action_dim) {
  if (steps_ == 0 || action_dim_ == 0 || features_.size == 0 || !features_.evaluate) {
    throw StructuralError("time-varying linear mean: empty feature map, horizon or action space");
  }
  if (features_.size > kMaxFeatures) {
    throw StructuralError("time-varying linear mean: at most " + std::to_string(kMaxFeatures) +
                          " features supported");
  }
}

void TimeVaryingLinearMean::check_step(std::size_t step) const {
  if (step >= steps_) {
    throw StructuralError("time-varying linear mean: step " + std::to_string(step) +
                          " outside horizon of " + std::to_string(steps_) + " steps");
  }
}

void TimeVaryingLinearMean::mean(const Eigen::VectorXd& params, ConstVectorRef x,
                                 std::size_t step, VectorRef out) const {
  check_step(step);
  const auto nf = idx(features_.size);
  FeatureBuffer phi(nf);
  features_.evaluate(x, phi);
  const RowMajorMap theta(params.data() + step * block_size(), idx(action_dim_), nf);
  out.noalias() = theta * phi;
}

void TimeVaryingLinearMean::jacobian_product(const Eigen::VectorXd& /*params*/, ConstVectorRef x,
                                             std::size_t step, ConstVectorRef y,
                                             VectorRef out) const {
  check_step(step);
  const auto nf = idx(features_.size);
  FeatureBuffer phi(nf);
  features_.evaluate(x, phi);
  const RowMajorMap y_block(y.data() + step * block_size(), idx(action_dim_), nf);
  out.noalias() = y_block * phi;
}

void TimeVaryingLinearMean::jacobian_transpose_product(const Eigen::VectorXd& /*params*/,
                                                       ConstVectorRef x, std::size_t step,
                                                       ConstVectorRef v, VectorRef out) const {
  check_step(step);
  const auto nf = idx(features_.size);
  FeatureBuffer phi(nf);
  features_.evaluate(x, phi);
  MutableRowMajorMap block(out.data() + step * block_size(), idx(action_dim_), nf);
  block.noalias() += v * phi.transpose();
}

// ---------------------------------------------------------------------------
// MlpMean

MlpMean::MlpMean(std::vector<std::size_t> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw StructuralError("mlp: need at least input and output sizes");
  for (auto s : sizes_) {
    if (s == 0) throw StructuralError("mlp: zero-width layer");
  }
  std::size_t offset = 0;
  for (std::size_t l = 1; l < sizes_.size(); ++l) {
    LayerOffsets o{offset, offset + sizes_[l] * sizes_[l - 1]};
    offsets_.push_back(o);
    offset = o.biases + sizes_[l];
  }
  parameter_count_ = offset;
}

Eigen::VectorXd MlpMean::glorot_uniform(std::uint64_t seed) const {
  Eigen::VectorXd params = Eigen::VectorXd::Zero(idx(parameter_count_));
  std::mt19937_64 rng(seed);
  for (std::size_t l = 1; l < sizes_.size(); ++l) {
    const double fan_in = static_cast<double>(sizes_[l - 1]);
    const double fan_out = static_cast<double>(sizes_[l]);
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    const auto& o = offsets_[l - 1];
    for (std::size_t k = 0; k < sizes_[l] * sizes_[l - 1]; ++k) params[idx(o.weights + k)] = dist(rng);
  }
  return params;
}

void MlpMean::check(const Eigen::VectorXd& params, ConstVectorRef x) const {
  if (params.size() != idx(parameter_count_)) {
    throw StructuralError("mlp: expected " + std::to_string(parameter_count_) +
                          " parameters, got " + std::to_string(params.size()));
  }
  if (x.size() != idx(sizes_.front())) {
    throw StructuralError("mlp: expected input of size " + std::to_string(sizes_.front()));
  }
}

std::vector<Eigen::VectorXd> MlpMean::forward(const Eigen::VectorXd& params,
                                              ConstVectorRef x) const {
  std::vector<Eigen::VectorXd> act;
  act.reserve(sizes_.size());
  act.emplace_back(x);
  const std::size_t layers = sizes_.size() - 1;
  for (std::size_t l = 1; l <= layers; ++l) {
    const auto& o = offsets_[l - 1];
    const RowMajorMap w(params.data() + o.weights, idx(sizes_[l]), idx(sizes_[l - 1]));
    const Eigen::Map<const Eigen::VectorXd> b(params.data() + o.biases, idx(sizes_[l]));
    Eigen::VectorXd z = w * act.back() + b;
    if (l < layers) z = z.array().tanh().matrix();
    act.push_back(std::move(z));
  }
  return act;
}

void MlpMean::mean(const Eigen::VectorXd& params, ConstVectorRef x, std::size_t /*step*/,
                   VectorRef out) const {
  check(params, x);
  out = forward(params, x).back();
}

void MlpMean::jacobian_product(const Eigen::VectorXd& params, ConstVectorRef x,
                               std::size_t /*step*/, ConstVectorRef y, VectorRef out) const {
  check(params, x);
  const auto act = forward(params, x);
  const std::size_t layers = sizes_.size() - 1;
  // Forward-mode tangent of the activations.
  Eigen::VectorXd tangent = Eigen::VectorXd::Zero(idx(sizes_.front()));
  for (std::size_t l = 1; l <= layers; ++l) {
    const auto& o = offsets_[l - 1];
    const RowMajorMap w(params.data() + o.weights, idx(sizes_[l]), idx(sizes_[l - 1]));
    const RowMajorMap dw(y.data() + o.weights, idx(sizes_[l]), idx(sizes_[l - 1]));
    const Eigen::Map<const Eigen::VectorXd> db(y.data() + o.biases, idx(sizes_[l]));
    Eigen::VectorXd dz = dw * act[l - 1] + w * tangent + db;
    if (l < layers) dz = (dz.array() * (1.0 - act[l].array().square())).matrix();
    tangent = std::move(dz);
  }
  out = tangent;
}

void MlpMean::jacobian_transpose_product(const Eigen::VectorXd& params, ConstVectorRef x,
                                         std::size_t /*step*/, ConstVectorRef v,
                                         VectorRef out) const {
  check(params, x);
  const auto act = forward(params, x);
  const std::size_t layers = sizes_.size() - 1;
  Eigen::VectorXd delta = v;  // d/dz of the output layer (identity activation)
  for (std::size_t l = layers; l >= 1; --l) {
    const auto& o = offsets_[l - 1];
    MutableRowMajorMap gw(out.data() + o.weights, idx(sizes_[l]), idx(sizes_[l - 1]));
    Eigen::Map<Eigen::VectorXd> gb(out.data() + o.biases, idx(sizes_[l]));
    gw.noalias() += delta * act[l - 1].transpose();
    gb += delta;
    if (l == 1) break;
    const RowMajorMap w(params.data() + o.weights, idx(sizes_[l]), idx(sizes_[l - 1]));
    Eigen::VectorXd back = w.transpose() * delta;
    delta = (back.array() * (1.0 - act[l - 1].array().square())).matrix();
  }
}

// ---------------------------------------------------------------------------
// GaussianPolicy

double gaussian_log_density(ConstVectorRef a, ConstVectorRef mean, double variance) {
  const double d = static_cast<double>(a.size());
  return -0.5 * (a - mean).squaredNorm() / variance -
         0.5 * d * std::log(2.0 * std::numbers::pi * variance);
}

GaussianPolicy::GaussianPolicy(std::shared_ptr<const MeanFunction> mean_fn, Eigen::VectorXd params,
                               double nu, double dt)
    : mean_fn_(std::move(mean_fn)), params_(std::move(params)), nu_(nu), dt_(dt) {
  if (!mean_fn_) throw StructuralError("gaussian policy: missing mean function");
  if (!(nu_ > 0.0) || !(dt_ > 0.0)) throw DomainError("gaussian policy: nu and dt must be positive");
  if (params_.size() != idx(mean_fn_->parameter_count())) {
    throw StructuralError("gaussian policy: expected " +
                          std::to_string(mean_fn_->parameter_count()) + " parameters, got " +
                          std::to_string(params_.size()));
  }
}

GaussianPolicy GaussianPolicy::with_params(Eigen::VectorXd params) const {
  return GaussianPolicy(mean_fn_, std::move(params), nu_, dt_);
}

Eigen::VectorXd GaussianPolicy::mean(ConstVectorRef x, std::size_t step) const {
  Eigen::VectorXd out(idx(action_dim()));
  mean(x, step, out);
  return out;
}

void GaussianPolicy::mean(ConstVectorRef x, std::size_t step, VectorRef out) const {
  mean_fn_->mean(params_, x, step, out);
}

double GaussianPolicy::log_prob(ConstVectorRef a, ConstVectorRef x, std::size_t step) const {
  if (a.size() != idx(action_dim())) throw StructuralError("log_prob: action dimension mismatch");
  return gaussian_log_density(a, mean(x, step), variance());
}

Eigen::VectorXd GaussianPolicy::score(ConstVectorRef a, ConstVectorRef x, std::size_t step) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(idx(parameter_count()));
  accumulate_score(a, x, step, 1.0, out);
  return out;
}

void GaussianPolicy::accumulate_score(ConstVectorRef a, ConstVectorRef x, std::size_t step,
                                      double scale, VectorRef out) const {
  if (a.size() != idx(action_dim())) throw StructuralError("score: action dimension mismatch");
  if (out.size() != idx(parameter_count())) throw StructuralError("score: output size mismatch");
  const Eigen::VectorXd v = (scale / variance()) * (a - mean(x, step));
  mean_fn_->jacobian_transpose_product(params_, x, step, v, out);
}

void GaussianPolicy::mean_jacobian_product(ConstVectorRef x, std::size_t step, ConstVectorRef y,
                                           VectorRef out) const {
  if (y.size() != idx(parameter_count()) || out.size() != idx(action_dim())) {
    throw StructuralError("mean_jacobian_product: shape mismatch");
  }
  mean_fn_->jacobian_product(params_, x, step, y, out);
}

void GaussianPolicy::mean_jacobian_transpose_product(ConstVectorRef x, std::size_t step,
                                                     ConstVectorRef v, VectorRef out) const {
  if (v.size() != idx(action_dim()) || out.size() != idx(parameter_count())) {
    throw StructuralError("mean_jacobian_transpose_product: shape mismatch");
  }
  mean_fn_->jacobian_transpose_product(params_, x, step, v, out);
}

}  // namespace aspic
