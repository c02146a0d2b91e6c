#include "aspic/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "aspic/errors.hpp"

namespace aspic {

using nlohmann::json;

double DeltaSpec::resolve(std::size_t n) const {
  return mode == Mode::absolute ? value : value * std::log(static_cast<double>(n));
}

void ExperimentConfig::validate() const {
  if (rollouts < 2) throw DomainError("config: rollouts must be >= 2");
  if (iterations < 1) throw DomainError("config: iterations must be >= 1");
  if (repeats < 1) throw DomainError("config: repeats must be >= 1");
  if (!(epsilon > 0.0)) throw DomainError("config: epsilon must be positive");
  if (!(gamma >= 0.0)) throw DomainError("config: gamma must be >= 0");
  if (estimator == EstimatorKind::smoothed && !(delta.value > 0.0)) {
    throw DomainError("config: delta must be positive for the smoothed estimator");
  }
  if (estimator == EstimatorKind::pice && !(gamma > 0.0)) {
    throw DomainError("config: the pice estimator requires gamma > 0");
  }
  if (policy.family != "linear" && policy.family != "mlp") {
    throw DomainError("config: unknown policy family '" + policy.family + "'");
  }
  if (solver.kind == SolverKind::per_timestep_pinv && policy.family != "linear") {
    throw StructuralError("config: per_timestep_pinv needs a time-varying linear policy");
  }
  if (solver.kind == SolverKind::cg && solver.cg_iterations < 1) {
    throw DomainError("config: cg iterations must be >= 1");
  }
  if (stop_at_threshold && !threshold) {
    throw DomainError("config: stop_at_threshold requires a threshold");
  }
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw StructuralError(where + ": expected a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw StructuralError(where + ": unknown key '" + key + "'");
  }
}

json delta_to_json(const DeltaSpec& d) {
  return d.mode == DeltaSpec::Mode::absolute ? json{{"absolute", d.value}}
                                             : json{{"lognfrac", d.value}};
}

DeltaSpec delta_from_json(const json& j) {
  if (j.is_number()) return DeltaSpec::absolute(j.get<double>());
  reject_unknown(j, {"absolute", "lognfrac"}, "delta");
  if (j.size() != 1) throw StructuralError("delta: exactly one of 'absolute' or 'lognfrac'");
  if (j.contains("absolute")) return DeltaSpec::absolute(j.at("absolute").get<double>());
  return DeltaSpec::lognfrac(j.at("lognfrac").get<double>());
}

json solver_to_json(const SolverOptions& s) {
  if (s.kind == SolverKind::per_timestep_pinv) {
    return {{"kind", "per_timestep_pinv"}, {"rcond", s.rcond}};
  }
  return {{"kind", "cg"},
          {"iterations", s.cg_iterations},
          {"tolerance", s.cg_tolerance},
          {"blockwise", s.blockwise},
          {"damping_scale", s.damping_scale}};
}

SolverOptions solver_from_json(const json& j) {
  reject_unknown(j, {"kind", "iterations", "tolerance", "blockwise", "damping_scale", "rcond"},
                 "solver");
  SolverOptions s;
  const auto kind = j.value("kind", std::string("cg"));
  if (kind == "cg") {
    s.kind = SolverKind::cg;
  } else if (kind == "per_timestep_pinv") {
    s.kind = SolverKind::per_timestep_pinv;
  } else {
    throw DomainError("solver: unknown kind '" + kind + "'");
  }
  s.cg_iterations = j.value("iterations", s.cg_iterations);
  s.cg_tolerance = j.value("tolerance", s.cg_tolerance);
  s.blockwise = j.value("blockwise", s.blockwise);
  s.damping_scale = j.value("damping_scale", s.damping_scale);
  s.rcond = j.value("rcond", s.rcond);
  return s;
}

template <typename T>
void override_field(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  reject_unknown(j,
                 {"name", "env", "policy", "rollouts", "iterations", "epsilon", "delta", "gamma",
                  "estimator", "whiten", "solver", "seed", "repeats", "threshold",
                  "stop_at_threshold"},
                 "config");
  ExperimentConfig c;
  c.name = j.value("name", c.name);
  if (j.contains("env")) {
    const auto& env = j.at("env");
    if (env.is_string()) {
      c.env_id = env.get<std::string>();
    } else {
      reject_unknown(env, {"id", "overrides"}, "env");
      c.env_id = env.at("id").get<std::string>();
      c.env_overrides = env.value("overrides", json::object());
    }
  }
  if (j.contains("policy")) {
    const auto& p = j.at("policy");
    reject_unknown(p, {"family", "hidden"}, "policy");
    c.policy.family = p.value("family", c.policy.family);
    c.policy.hidden = p.value("hidden", c.policy.hidden);
  }
  c.rollouts = j.value("rollouts", c.rollouts);
  c.iterations = j.value("iterations", c.iterations);
  c.epsilon = j.value("epsilon", c.epsilon);
  if (j.contains("delta")) c.delta = delta_from_json(j.at("delta"));
  c.gamma = j.value("gamma", c.gamma);
  if (j.contains("estimator")) c.estimator = estimator_from_string(j.at("estimator").get<std::string>());
  c.whiten = j.value("whiten", c.whiten);
  if (j.contains("solver")) c.solver = solver_from_json(j.at("solver"));
  c.seed = j.value("seed", c.seed);
  c.repeats = j.value("repeats", c.repeats);
  if (j.contains("threshold") && !j.at("threshold").is_null()) {
    c.threshold = j.at("threshold").get<double>();
  }
  c.stop_at_threshold = j.value("stop_at_threshold", c.stop_at_threshold);
  // Validate the environment overrides eagerly so typos fail at load time.
  make_environment(c.env_id, c.env_overrides);
  c.validate();
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json j{{"name", c.name},
         {"env", {{"id", c.env_id}, {"overrides", c.env_overrides}}},
         {"policy", {{"family", c.policy.family}, {"hidden", c.policy.hidden}}},
         {"rollouts", c.rollouts},
         {"iterations", c.iterations},
         {"epsilon", c.epsilon},
         {"delta", delta_to_json(c.delta)},
         {"gamma", c.gamma},
         {"estimator", to_string(c.estimator)},
         {"whiten", c.whiten},
         {"solver", solver_to_json(c.solver)},
         {"seed", c.seed},
         {"repeats", c.repeats},
         {"threshold", c.threshold ? json(*c.threshold) : json(nullptr)},
         {"stop_at_threshold", c.stop_at_threshold}};
  return j;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw StructuralError("config file '" + path + "': " + e.what());
  }
  return config_from_json(j);
}

std::string git_blob_sha1(const std::string& content) {
  const std::string payload = "blob " + std::to_string(content.size()) + '\0' + content;
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(payload.data(), payload.size(), digest, &len, EVP_sha1(), nullptr) != 1) {
    throw Error("sha1 digest failed");
  }
  std::ostringstream hex;
  hex << std::hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex.width(2);
    hex.fill('0');
    hex << static_cast<int>(digest[i]);
  }
  return hex.str();
}

std::string config_hash(const ExperimentConfig& config) {
  // json objects keep keys sorted, so dump() is canonical.
  return git_blob_sha1(config_to_json(config).dump());
}

std::unique_ptr<Environment> make_environment(const std::string& id, const json& overrides) {
  const json& o = overrides.is_null() ? json::object() : overrides;
  if (id == "lq_viapoints") {
    reject_unknown(o, {"viapoints", "sigma", "horizon", "dt", "nu", "x0"}, "lq_viapoints overrides");
    LqViapointsParams p;
    if (o.contains("viapoints")) {
      p.viapoints.clear();
      for (const auto& vp : o.at("viapoints")) {
        p.viapoints.push_back({vp.at(0).get<double>(), vp.at(1).get<double>()});
      }
    }
    override_field(o, "sigma", p.sigma);
    override_field(o, "horizon", p.horizon);
    override_field(o, "dt", p.dt);
    override_field(o, "nu", p.nu);
    override_field(o, "x0", p.x0);
    return std::make_unique<LqViapoints>(std::move(p));
  }
  if (id == "pendulum") {
    reject_unknown(o,
                   {"damping", "omega0_sq", "lambda", "dt", "horizon", "nu", "x0", "xdot0",
                    "height_weight", "velocity_weight"},
                   "pendulum overrides");
    PendulumParams p;
    override_field(o, "damping", p.damping);
    override_field(o, "omega0_sq", p.omega0_sq);
    override_field(o, "lambda", p.lambda);
    override_field(o, "dt", p.dt);
    override_field(o, "horizon", p.horizon);
    override_field(o, "nu", p.nu);
    override_field(o, "x0", p.x0);
    override_field(o, "xdot0", p.xdot0);
    override_field(o, "height_weight", p.height_weight);
    override_field(o, "velocity_weight", p.velocity_weight);
    return std::make_unique<Pendulum>(p);
  }
  if (id == "acrobot") {
    reject_unknown(o,
                   {"gravity", "l1", "l2", "m1", "m2", "lc1", "lc2", "i1", "i2", "lambda", "dt",
                    "horizon", "nu", "x0", "height_weight", "velocity_weight"},
                   "acrobot overrides");
    AcrobotParams p;
    override_field(o, "gravity", p.gravity);
    override_field(o, "l1", p.l1);
    override_field(o, "l2", p.l2);
    override_field(o, "m1", p.m1);
    override_field(o, "m2", p.m2);
    override_field(o, "lc1", p.lc1);
    override_field(o, "lc2", p.lc2);
    override_field(o, "i1", p.i1);
    override_field(o, "i2", p.i2);
    override_field(o, "lambda", p.lambda);
    override_field(o, "dt", p.dt);
    override_field(o, "horizon", p.horizon);
    override_field(o, "nu", p.nu);
    if (o.contains("x0")) {
      const auto v = o.at("x0").get<std::vector<double>>();
      if (v.size() != 4) throw StructuralError("acrobot overrides: x0 needs 4 entries");
      p.x0 = Eigen::Vector4d(v[0], v[1], v[2], v[3]);
    }
    override_field(o, "height_weight", p.height_weight);
    override_field(o, "velocity_weight", p.velocity_weight);
    return std::make_unique<Acrobot>(p);
  }
  throw StructuralError("unknown environment '" + id + "'");
}

GaussianPolicy make_policy(const PolicyConfig& config, const Environment& env,
                           std::uint64_t init_seed) {
  if (config.family == "linear") return make_linear_policy(env);
  if (config.family == "mlp") return make_mlp_policy(env, config.hidden, init_seed);
  throw DomainError("unknown policy family '" + config.family + "'");
}

json params_to_json(const GaussianPolicy& policy) {
  const auto& p = policy.params();
  return {{"family", policy.mean_function().family()},
          {"shape", policy.mean_function().parameter_shape()},
          {"values", std::vector<double>(p.data(), p.data() + p.size())}};
}

Eigen::VectorXd params_from_json(const json& j, const MeanFunction& mean_fn) {
  if (j.at("family").get<std::string>() != mean_fn.family() ||
      j.at("shape").get<std::vector<std::size_t>>() != mean_fn.parameter_shape()) {
    throw StructuralError("parameter checkpoint does not match the policy shape");
  }
  const auto values = j.at("values").get<std::vector<double>>();
  if (values.size() != mean_fn.parameter_count()) {
    throw StructuralError("parameter checkpoint has the wrong number of values");
  }
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace aspic
