#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "aspic/config.hpp"
#include "aspic/environments.hpp"
#include "aspic/errors.hpp"
#include "aspic/export.hpp"
#include "aspic/gradients.hpp"
#include "aspic/runner.hpp"
#include "aspic/seeding.hpp"
#include "aspic/smoothing.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

aspic::ExperimentConfig parse_config(const std::string& text) {
  return aspic::config_from_json(json::parse(text));
}

py::dict smoothing_dict(const aspic::SmoothingResult& r) {
  py::dict d;
  d["alpha"] = r.alpha;
  d["weights"] = r.weights;
  d["entropy"] = r.entropy;
  d["kl_estimate"] = r.kl_estimate;
  return d;
}

aspic::GaussianPolicy linear_policy_with(const aspic::Environment& env,
                                         const std::optional<Eigen::VectorXd>& params) {
  aspic::GaussianPolicy pol = aspic::make_linear_policy(env);
  return params ? pol.with_params(*params) : pol;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Adaptive smoothing of path integral control";

  auto base = py::register_exception<aspic::Error>(m, "AspicError", PyExc_RuntimeError);
  py::register_exception<aspic::DomainError>(m, "DomainError", base.ptr());
  py::register_exception<aspic::StructuralError>(m, "StructuralError", base.ptr());
  auto numerical = py::register_exception<aspic::NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<aspic::RolloutError>(m, "RolloutError", numerical.ptr());
  py::register_exception<aspic::BatchError>(m, "BatchError", base.ptr());

  m.def("derive_seed", &aspic::derive_seed, py::arg("parent"), py::arg("index"));

  m.def("normalized_weights",
        [](const Eigen::VectorXd& costs, double gamma, double alpha) {
          return aspic::normalized_weights(costs, gamma, alpha);
        },
        py::arg("costs"), py::arg("gamma"), py::arg("alpha"));
  m.def("weight_entropy", [](const Eigen::VectorXd& w) { return aspic::weight_entropy(w); }, py::arg("weights"));
  m.def("kl_estimate", [](const Eigen::VectorXd& w) { return aspic::kl_estimate(w); }, py::arg("weights"));
  m.def("find_alpha",
        [](const Eigen::VectorXd& costs, double gamma, double delta, double relative_tolerance) {
          aspic::AlphaSearchOptions opts;
          opts.relative_tolerance = relative_tolerance;
          return smoothing_dict(aspic::find_alpha(costs, gamma, delta, opts));
        },
        py::arg("costs"), py::arg("gamma"), py::arg("delta"), py::arg("relative_tolerance") = 1e-3);
  m.def("smoothed_cost_value",
        [](const Eigen::VectorXd& costs, double gamma, double alpha) {
          return aspic::smoothed_cost_value(costs, gamma, alpha);
        },
        py::arg("costs"), py::arg("gamma"), py::arg("alpha"));

  m.def("sample_costs",
        [](const std::string& env_id, const std::string& overrides, std::size_t n, std::uint64_t seed,
           double gamma, const std::optional<Eigen::VectorXd>& params) {
          const auto env = aspic::make_environment(env_id, json::parse(overrides));
          const aspic::GaussianPolicy pol = linear_policy_with(*env, params);
          py::gil_scoped_release release;
          return Eigen::VectorXd(aspic::sample_batch(*env, pol, n, seed, gamma).stochastic_costs());
        },
        py::arg("env_id"), py::arg("overrides") = "{}", py::arg("n"), py::arg("seed"),
        py::arg("gamma") = 1.0, py::arg("params") = py::none());
  m.def("smoothed_gradient",
        [](const std::string& env_id, const std::string& overrides, std::size_t n, std::uint64_t seed,
           double gamma, double alpha, bool whiten, const std::optional<Eigen::VectorXd>& params) {
          const auto env = aspic::make_environment(env_id, json::parse(overrides));
          const aspic::GaussianPolicy pol = linear_policy_with(*env, params);
          const aspic::RolloutBatch batch = aspic::sample_batch(*env, pol, n, seed, gamma);
          return aspic::smoothed_gradient(batch, pol, alpha, whiten).direction;
        },
        py::arg("env_id"), py::arg("overrides") = "{}", py::arg("n"), py::arg("seed"),
        py::arg("gamma") = 1.0, py::arg("alpha"), py::arg("whiten") = true, py::arg("params") = py::none());

  m.def("normalize_config", [](const std::string& text) {
    return aspic::config_to_json(parse_config(text)).dump();
  }, py::arg("config"));
  m.def("config_hash", [](const std::string& text) { return aspic::config_hash(parse_config(text)); },
        py::arg("config"));
  m.def("run",
        [](const std::string& text, unsigned jobs) {
          const aspic::ExperimentConfig config = parse_config(text);
          aspic::ExperimentResult result;
          {
            py::gil_scoped_release release;
            result = aspic::run_aspic(config, jobs);
          }
          return aspic::result_to_json(result).dump();
        },
        py::arg("config"), py::arg("jobs") = 1);
  m.def("sweep",
        [](const std::string& text, const std::string& axis, const std::vector<double>& values,
           const std::string& delta_mode, std::optional<std::size_t> budget,
           const std::vector<double>& epsilons, unsigned jobs) {
          const aspic::ExperimentConfig config = parse_config(text);
          if (delta_mode != "absolute" && delta_mode != "lognfrac") {
            throw aspic::DomainError("sweep: delta_mode must be 'lognfrac' or 'absolute'");
          }
          aspic::SweepOptions opts;
          opts.delta_mode = delta_mode == "absolute" ? aspic::DeltaSpec::Mode::absolute
                                                     : aspic::DeltaSpec::Mode::lognfrac;
          opts.rollout_budget = budget;
          opts.epsilon_values = epsilons;
          opts.jobs = jobs;
          const aspic::SweepAxis ax = aspic::sweep_axis_from_string(axis);
          aspic::SweepResult result;
          {
            py::gil_scoped_release release;
            result = aspic::sweep(config, ax, values, opts);
          }
          return aspic::sweep_to_json(result).dump();
        },
        py::arg("config"), py::arg("axis"), py::arg("values"), py::arg("delta_mode") = "lognfrac",
        py::arg("budget") = py::none(), py::arg("epsilons") = std::vector<double>{}, py::arg("jobs") = 1);
  m.def("summary",
        [](const std::string& result) {
          return aspic::summary_json(aspic::result_from_json(json::parse(result))).dump();
        },
        py::arg("result"));
  m.def("export",
        [](const std::string& result, const std::filesystem::path& dir, const std::string& stem,
           const std::vector<std::string>& formats) {
          std::vector<aspic::ExportFormat> fmts;
          for (const auto& f : formats) fmts.push_back(aspic::export_format_from_string(f));
          return aspic::export_result(aspic::result_from_json(json::parse(result)), dir, stem, fmts);
        },
        py::arg("result"), py::arg("out_dir"), py::arg("stem"),
        py::arg("formats") = std::vector<std::string>{"csv", "json"});
}
