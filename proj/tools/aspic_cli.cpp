// Command line front end: run experiments, parameter sweeps and re-export results.
//
//   aspic run <config.json>
//   aspic sweep --axis {delta|n|grid} --values 0,0.2,0.5 <config.json>
//   aspic export --format {csv,json} <name.results.json>
//
// Outputs go to --out, else $ASPIC_OUTPUT_DIR, else ./results.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aspic/errors.hpp"
#include "aspic/export.hpp"
#include "aspic/runner.hpp"

namespace {

std::filesystem::path output_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("ASPIC_OUTPUT_DIR"); env != nullptr && *env != '\0') return env;
  return "results";
}

std::string results_stem(const std::filesystem::path& results_file) {
  std::string stem = results_file.filename().string();
  const std::string suffix = ".results.json";
  if (stem.size() > suffix.size() && stem.ends_with(suffix)) return stem.substr(0, stem.size() - suffix.size());
  return results_file.stem().string();
}

void print_summary(const aspic::ExperimentResult& result) {
  for (const auto& run : result.runs) {
    std::cout << "run " << run.run << ": iterations=" << run.records.size()
              << " final_cost=" << run.final_cost();
    if (run.iterations_to_threshold) std::cout << " iterations_to_threshold=" << *run.iterations_to_threshold;
    if (!run.ok()) std::cout << " ERROR: " << run.error;
    std::cout << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive smoothing of path integral control"};
  app.require_subcommand(1);

  std::string out_flag;
  unsigned jobs = 1;

  auto* run_cmd = app.add_subcommand("run", "Run every repeat of an experiment config");
  std::string run_config;
  std::optional<std::size_t> repeats_override;
  std::optional<std::size_t> iterations_override;
  std::optional<std::uint64_t> seed_override;
  bool verbose = false;
  run_cmd->add_option("config", run_config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--out", out_flag, "Output directory");
  run_cmd->add_option("--jobs", jobs, "Worker threads for repeats");
  run_cmd->add_option("--repeats", repeats_override, "Override the number of repeats");
  run_cmd->add_option("--iterations", iterations_override, "Override the iteration budget");
  run_cmd->add_option("--seed", seed_override, "Override the master seed");
  run_cmd->add_flag("-v,--verbose", verbose, "Print every iteration");

  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep delta, N, or a delta x epsilon grid");
  std::string sweep_config;
  std::string axis_name;
  std::vector<double> values;
  std::vector<double> epsilons;
  std::string delta_mode = "lognfrac";
  std::optional<std::size_t> budget;
  sweep_cmd->add_option("config", sweep_config, "Template config (JSON)")->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--axis", axis_name, "Sweep axis")->required()->check(CLI::IsMember({"delta", "n", "grid"}));
  sweep_cmd->add_option("--values", values, "Delta values (delta/grid) or N values (n)")->required()->delimiter(',');
  sweep_cmd->add_option("--epsilons", epsilons, "Trust-region sizes for the grid axis")->delimiter(',');
  sweep_cmd->add_option("--delta-mode", delta_mode, "How delta values are read")->check(CLI::IsMember({"lognfrac", "absolute"}));
  sweep_cmd->add_option("--budget", budget, "Fixed rollout budget for the n axis");
  sweep_cmd->add_option("--out", out_flag, "Output directory");
  sweep_cmd->add_option("--jobs", jobs, "Worker threads for repeats");

  auto* export_cmd = app.add_subcommand("export", "Re-export a results file as CSV or summary JSON");
  std::string results_file;
  std::vector<std::string> formats;
  export_cmd->add_option("results", results_file, "<name>.results.json written by 'run'")->required()->check(CLI::ExistingFile);
  export_cmd->add_option("--format", formats, "csv and/or json")->required()->check(CLI::IsMember({"csv", "json"}));
  export_cmd->add_option("--out", out_flag, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    const auto dir = output_dir(out_flag);
    if (*run_cmd) {
      aspic::ExperimentConfig config = aspic::load_config(run_config);
      if (repeats_override) config.repeats = *repeats_override;
      if (iterations_override) config.iterations = *iterations_override;
      if (seed_override) config.seed = *seed_override;
      aspic::ExperimentResult result;
      if (verbose && jobs <= 1) {
        result.config = config;
        for (std::size_t r = 0; r < config.repeats; ++r) {
          result.runs.push_back(aspic::run_single(config, r, [](const aspic::IterationRecord& rec) {
            std::cout << "run " << rec.run << " iter " << rec.iteration << " cost " << rec.mean_cost
                      << " alpha " << rec.alpha << " kl_est " << rec.kl_estimate << " eta " << rec.eta
                      << '\n';
          }));
        }
      } else {
        result = aspic::run_aspic(config, jobs);
      }
      print_summary(result);
      const auto written = aspic::export_result(result, dir, config.name,
                                                {aspic::ExportFormat::csv, aspic::ExportFormat::json});
      const auto full = dir / (config.name + ".results.json");
      aspic::write_text_file(full, aspic::result_to_json(result).dump() + "\n");
      for (const auto& p : written) std::cout << "wrote " << p.string() << '\n';
      std::cout << "wrote " << full.string() << '\n';
      return result.ok() ? EXIT_SUCCESS : EXIT_FAILURE;
    }
    if (*sweep_cmd) {
      const aspic::ExperimentConfig config = aspic::load_config(sweep_config);
      aspic::SweepOptions opts;
      opts.delta_mode = delta_mode == "absolute" ? aspic::DeltaSpec::Mode::absolute
                                                 : aspic::DeltaSpec::Mode::lognfrac;
      opts.rollout_budget = budget;
      opts.epsilon_values = epsilons;
      opts.jobs = jobs;
      const auto axis = aspic::sweep_axis_from_string(axis_name);
      const aspic::SweepResult result = aspic::sweep(config, axis, values, opts);
      bool ok = true;
      for (const auto& cell : result.cells) {
        std::cout << "delta=" << cell.delta;
        if (cell.epsilon) std::cout << " epsilon=" << *cell.epsilon;
        if (cell.rollouts) std::cout << " N=" << *cell.rollouts;
        if (!cell.error.empty()) {
          std::cout << " ERROR: " << cell.error << '\n';
          ok = false;
          continue;
        }
        ok = ok && cell.result.ok();
        std::cout << " median_itt=" << cell.summary.median_iterations_to_threshold
                  << " mean_final_cost=" << cell.summary.mean_final_cost
                  << " mean_cost=" << cell.summary.mean_cost_over_iterations << '\n';
      }
      std::filesystem::create_directories(dir);
      const auto path = dir / (config.name + ".sweep_" + axis_name + ".json");
      aspic::write_text_file(path, aspic::sweep_to_json(result).dump(2) + "\n");
      std::cout << "wrote " << path.string() << '\n';
      return ok ? EXIT_SUCCESS : EXIT_FAILURE;
    }
    if (*export_cmd) {
      std::ifstream in(results_file);
      const auto j = nlohmann::json::parse(in);
      const aspic::ExperimentResult result = aspic::result_from_json(j);
      std::vector<aspic::ExportFormat> fmts;
      for (const auto& f : formats) fmts.push_back(aspic::export_format_from_string(f));
      for (const auto& p : aspic::export_result(result, dir, results_stem(results_file), fmts)) {
        std::cout << "wrote " << p.string() << '\n';
      }
      return result.ok() ? EXIT_SUCCESS : EXIT_FAILURE;
    }
  } catch (const std::exception& e) {
    std::cerr << "aspic: " << e.what() << '\n';
    return EXIT_FAILURE;
  }
  return EXIT_SUCCESS;
}
