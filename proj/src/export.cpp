#include "aspic/export.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "aspic/errors.hpp"

namespace aspic {

using nlohmann::json;

namespace {

// NaN/inf are not representable in JSON; emit null instead.
json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json record_to_json(const IterationRecord& r) {
  return {{"run", r.run},         {"iter", r.iteration},           {"mean_cost", r.mean_cost},
          {"std_cost", r.std_cost}, {"alpha", r.alpha},           {"kl_est", r.kl_estimate},
          {"eta", r.eta},         {"achieved_kl", r.achieved_kl}, {"wall_ms", r.wall_ms},
          {"seed", r.seed}};
}

IterationRecord record_from_json(const json& j) {
  IterationRecord r;
  r.run = j.at("run").get<std::size_t>();
  r.iteration = j.at("iter").get<std::size_t>();
  r.mean_cost = j.at("mean_cost").get<double>();
  r.std_cost = j.at("std_cost").get<double>();
  r.alpha = j.at("alpha").get<double>();
  r.kl_estimate = j.at("kl_est").get<double>();
  r.eta = j.at("eta").get<double>();
  r.achieved_kl = j.at("achieved_kl").get<double>();
  r.wall_ms = j.at("wall_ms").get<double>();
  r.seed = j.at("seed").get<std::uint64_t>();
  return r;
}

json run_summary(const RunResult& run) {
  return {{"run", run.run},
          {"seed", run.seed},
          {"iterations", run.records.size()},
          {"final_cost", number_or_null(run.final_cost())},
          {"iterations_to_threshold",
           run.iterations_to_threshold ? json(*run.iterations_to_threshold) : json(nullptr)},
          {"rollouts", run.rollouts_simulated},
          {"error", run.error.empty() ? json(nullptr) : json(run.error)}};
}

}  // namespace

ExportFormat export_format_from_string(const std::string& name) {
  if (name == "csv") return ExportFormat::csv;
  if (name == "json") return ExportFormat::json;
  throw DomainError("unknown export format '" + name + "'");
}

void write_csv(std::ostream& out, const ExperimentResult& result) {
  out << kCsvHeader << '\n';
  out.precision(17);
  for (const auto& run : result.runs) {
    for (const auto& r : run.records) {
      out << r.run << ',' << r.iteration << ',' << r.mean_cost << ',' << r.std_cost << ','
          << r.alpha << ',' << r.kl_estimate << ',' << r.eta << ',' << r.achieved_kl << ','
          << r.wall_ms << ',' << r.seed << '\n';
    }
  }
}

json summary_json(const ExperimentResult& result) {
  json runs = json::array();
  for (const auto& run : result.runs) runs.push_back(run_summary(run));
  return {{"config", config_to_json(result.config)},
          {"config_hash", config_hash(result.config)},
          {"runs", runs},
          {"ok", result.ok()}};
}

json result_to_json(const ExperimentResult& result) {
  json j = summary_json(result);
  for (std::size_t i = 0; i < result.runs.size(); ++i) {
    const auto& run = result.runs[i];
    json records = json::array();
    for (const auto& r : run.records) records.push_back(record_to_json(r));
    j["runs"][i]["records"] = std::move(records);
    const auto& p = run.final_params;
    j["runs"][i]["final_params"] = std::vector<double>(p.data(), p.data() + p.size());
  }
  return j;
}

ExperimentResult result_from_json(const json& j) {
  ExperimentResult out;
  out.config = config_from_json(j.at("config"));
  for (const auto& jr : j.at("runs")) {
    RunResult run;
    run.run = jr.at("run").get<std::size_t>();
    run.seed = jr.at("seed").get<std::uint64_t>();
    if (!jr.at("iterations_to_threshold").is_null()) {
      run.iterations_to_threshold = jr.at("iterations_to_threshold").get<std::size_t>();
    }
    run.rollouts_simulated = jr.value("rollouts", std::size_t{0});
    if (!jr.at("error").is_null()) run.error = jr.at("error").get<std::string>();
    if (jr.contains("records")) {
      for (const auto& r : jr.at("records")) run.records.push_back(record_from_json(r));
    }
    if (jr.contains("final_params")) {
      const auto v = jr.at("final_params").get<std::vector<double>>();
      run.final_params = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
    out.runs.push_back(std::move(run));
  }
  return out;
}

json sweep_to_json(const SweepResult& sweep) {
  json cells = json::array();
  for (const auto& cell : sweep.cells) {
    const auto& s = cell.summary;
    json c{{"delta", cell.delta},
           {"epsilon", cell.epsilon ? json(*cell.epsilon) : json(nullptr)},
           {"rollouts", cell.rollouts ? json(*cell.rollouts) : json(nullptr)},
           {"error", cell.error.empty() ? json(nullptr) : json(cell.error)}};
    if (cell.error.empty()) {
      c["summary"] = {{"median_iterations_to_threshold", number_or_null(s.median_iterations_to_threshold)},
                      {"mean_iterations_to_threshold", number_or_null(s.mean_iterations_to_threshold)},
                      {"std_iterations_to_threshold", number_or_null(s.std_iterations_to_threshold)},
                      {"reached", s.reached},
                      {"mean_final_cost", number_or_null(s.mean_final_cost)},
                      {"std_final_cost", number_or_null(s.std_final_cost)},
                      {"mean_cost_over_iterations", number_or_null(s.mean_cost_over_iterations)},
                      {"failed_runs", s.failed_runs}};
      c["result"] = summary_json(cell.result);
    }
    cells.push_back(std::move(c));
  }
  return {{"axis", to_string(sweep.axis)}, {"cells", cells}};
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

std::vector<std::filesystem::path> export_result(const ExperimentResult& result,
                                                 const std::filesystem::path& dir,
                                                 const std::string& stem,
                                                 const std::vector<ExportFormat>& formats) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory '" + dir.string() + "': " + ec.message());
  std::vector<std::filesystem::path> written;
  for (ExportFormat f : formats) {
    if (f == ExportFormat::csv) {
      std::ostringstream csv;
      write_csv(csv, result);
      written.push_back(dir / (stem + ".csv"));
      write_text_file(written.back(), csv.str());
    } else {
      written.push_back(dir / (stem + ".summary.json"));
      write_text_file(written.back(), summary_json(result).dump(2) + "\n");
    }
  }
  return written;
}

}  // namespace aspic
