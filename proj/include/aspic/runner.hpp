#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aspic/config.hpp"

namespace aspic {

/// Diagnostics of one ASPIC iteration; one CSV row.
struct IterationRecord {
  std::size_t run = 0;
  std::size_t iteration = 0;
  double mean_cost = 0.0;    // batch mean of S^gamma under theta_n
  double std_cost = 0.0;     // population std over the batch
  double alpha = 0.0;        // chosen smoothing parameter (0 for the direct estimator)
  double kl_estimate = 0.0;  // log N - H_N(w) at alpha (0 for the direct estimator)
  double eta = 0.0;
  double achieved_kl = 0.0;
  double wall_ms = 0.0;
  std::uint64_t seed = 0;  // run seed
};

struct RunResult {
  std::size_t run = 0;
  std::uint64_t seed = 0;
  std::vector<IterationRecord> records;
  /// First iteration whose batch mean cost is <= the configured threshold.
  std::optional<std::size_t> iterations_to_threshold;
  std::size_t rollouts_simulated = 0;
  Eigen::VectorXd final_params;
  /// Non-empty when the run was aborted; records up to the failure are kept.
  std::string error;

  bool ok() const noexcept { return error.empty(); }
  /// Batch mean cost of the last recorded iteration (NaN without records).
  double final_cost() const;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<RunResult> runs;

  bool ok() const noexcept;
};

/// Seed of repeat `repeat` under the config's master seed.
std::uint64_t run_seed(const ExperimentConfig& config, std::size_t repeat);

/// Per-iteration hook, called after every record is produced.
using IterationObserver = std::function<void(const IterationRecord&)>;

/// One ASPIC run: per iteration sample a batch, pick alpha for the smoothing
/// strength, form the (whitened) gradient of the configured estimator and take
/// a trust-region natural-gradient step. Errors end the run and are recorded.
RunResult run_single(const ExperimentConfig& config, std::size_t repeat,
                     const IterationObserver& observer = {});

/// All repeats of a config; `jobs` > 1 runs repeats on worker threads.
/// Results are ordered by repeat and independent of `jobs`.
ExperimentResult run_aspic(const ExperimentConfig& config, unsigned jobs = 1);

enum class SweepAxis { delta, n, grid };

SweepAxis sweep_axis_from_string(const std::string& name);
std::string to_string(SweepAxis axis);

struct SweepOptions {
  /// delta axis: how the values are read. A value of 0 selects the direct estimator.
  DeltaSpec::Mode delta_mode = DeltaSpec::Mode::lognfrac;
  /// n axis: fixed rollout budget; iterations = budget / N when set.
  std::optional<std::size_t> rollout_budget;
  /// grid axis: epsilon values crossed with the delta values.
  std::vector<double> epsilon_values;
  unsigned jobs = 1;
};

/// Aggregates of one sweep cell over its repeats. Runs that never reach the
/// threshold count as +inf in the median.
struct CellSummary {
  double median_iterations_to_threshold = 0.0;
  double mean_iterations_to_threshold = 0.0;  // over runs that reached it
  double std_iterations_to_threshold = 0.0;
  std::size_t reached = 0;
  double mean_final_cost = 0.0;
  double std_final_cost = 0.0;
  double mean_cost_over_iterations = 0.0;  // averaged over all iterations and runs
  std::size_t failed_runs = 0;
};

struct SweepCell {
  double delta = 0.0;  // in the sweep's delta units
  std::optional<double> epsilon;
  std::optional<std::size_t> rollouts;
  ExperimentResult result;
  CellSummary summary;
  std::string error;  // set when the cell could not be configured
};

struct SweepResult {
  SweepAxis axis = SweepAxis::delta;
  std::vector<SweepCell> cells;
};

CellSummary summarize(const ExperimentResult& result);

/// Runs `repeats` runs per cell; per-cell failures are recorded and the sweep continues.
SweepResult sweep(const ExperimentConfig& base, SweepAxis axis, const std::vector<double>& values,
                  const SweepOptions& options = {});

}  // namespace aspic
