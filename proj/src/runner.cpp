#include "aspic/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

#include "aspic/errors.hpp"
#include "aspic/seeding.hpp"
#include "aspic/smoothing.hpp"

namespace aspic {

double RunResult::final_cost() const {
  return records.empty() ? std::numeric_limits<double>::quiet_NaN() : records.back().mean_cost;
}

bool ExperimentResult::ok() const noexcept {
  return std::all_of(runs.begin(), runs.end(), [](const RunResult& r) { return r.ok(); });
}

std::uint64_t run_seed(const ExperimentConfig& config, std::size_t repeat) {
  return derive_seed(config.seed, repeat);
}

namespace {

// Policy initialization draws from its own branch of the seed tree.
constexpr std::uint64_t kInitBranch = 0xffffffffULL;

}  // namespace

RunResult run_single(const ExperimentConfig& config, std::size_t repeat,
                     const IterationObserver& observer) {
  config.validate();
  RunResult result;
  result.run = repeat;
  result.seed = run_seed(config, repeat);

  const auto env = make_environment(config.env_id, config.env_overrides);
  GaussianPolicy policy = make_policy(config.policy, *env, derive_seed(result.seed, kInitBranch));
  const double delta = config.delta.resolve(config.rollouts);

  try {
    for (std::size_t it = 0; it < config.iterations; ++it) {
      const auto start = std::chrono::steady_clock::now();
      const std::uint64_t iteration_seed = derive_seed(result.seed, it);
      RolloutBatch batch = sample_batch(*env, policy, config.rollouts, iteration_seed, config.gamma);
      result.rollouts_simulated += batch.size();

      const auto& costs = batch.stochastic_costs();
      IterationRecord rec;
      rec.run = repeat;
      rec.iteration = it;
      rec.seed = result.seed;
      rec.mean_cost = costs.mean();
      rec.std_cost = std::sqrt((costs.array() - rec.mean_cost).square().mean());

      GradientEstimate grad;
      switch (config.estimator) {
        case EstimatorKind::smoothed: {
          const SmoothingResult s = find_alpha(costs, config.gamma, delta);
          rec.alpha = s.alpha;
          rec.kl_estimate = s.kl_estimate;
          grad = smoothed_gradient(batch, policy, s.alpha, config.whiten);
          break;
        }
        case EstimatorKind::direct:
          grad = direct_gradient(batch, policy, config.whiten);
          break;
        case EstimatorKind::pice: {
          const SmoothingResult s = evaluate_smoothing(costs, config.gamma, 0.0);
          rec.kl_estimate = s.kl_estimate;
          grad = pice_gradient(batch, policy);
          break;
        }
      }

      const TrustRegionUpdate upd =
          trust_region_step(batch, policy, grad.direction, config.epsilon, config.solver);
      rec.eta = upd.eta;
      rec.achieved_kl = upd.achieved_kl;
      policy = policy.with_params(upd.new_params);

      rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                        .count();
      if (config.threshold && !result.iterations_to_threshold && rec.mean_cost <= *config.threshold) {
        result.iterations_to_threshold = it;
      }
      result.records.push_back(rec);
      if (observer) observer(rec);
      if (config.stop_at_threshold && result.iterations_to_threshold) break;
    }
  } catch (const Error& e) {
    result.error = e.what();
  }
  result.final_params = policy.params();
  return result;
}

ExperimentResult run_aspic(const ExperimentConfig& config, unsigned jobs) {
  config.validate();
  ExperimentResult out;
  out.config = config;
  out.runs.resize(config.repeats);
  const unsigned workers =
      static_cast<unsigned>(std::clamp<std::size_t>(jobs, 1, config.repeats));
  if (workers == 1) {
    for (std::size_t r = 0; r < config.repeats; ++r) out.runs[r] = run_single(config, r);
    return out;
  }
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t r = next++; r < config.repeats; r = next++) {
          out.runs[r] = run_single(config, r);
        }
      });
    }
  }
  return out;
}

SweepAxis sweep_axis_from_string(const std::string& name) {
  if (name == "delta") return SweepAxis::delta;
  if (name == "n") return SweepAxis::n;
  if (name == "grid") return SweepAxis::grid;
  throw DomainError("unknown sweep axis '" + name + "'");
}

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::delta:
      return "delta";
    case SweepAxis::n:
      return "n";
    case SweepAxis::grid:
      return "grid";
  }
  return "unknown";
}

namespace {

std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return {m, std::sqrt(s / static_cast<double>(v.size()))};
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  const double a = v[n / 2 - 1];
  const double b = v[n / 2];
  if (std::isinf(a) || std::isinf(b)) return std::isinf(a) ? a : b;
  return 0.5 * (a + b);
}

ExperimentConfig with_delta(ExperimentConfig c, double value, DeltaSpec::Mode mode) {
  if (value == 0.0) {
    c.estimator = EstimatorKind::direct;
    c.delta = {mode, 0.0};
  } else {
    c.estimator = EstimatorKind::smoothed;
    c.delta = {mode, value};
  }
  return c;
}

}  // namespace

CellSummary summarize(const ExperimentResult& result) {
  CellSummary s;
  std::vector<double> itt_all;
  std::vector<double> itt_reached;
  std::vector<double> finals;
  double cost_sum = 0.0;
  std::size_t cost_count = 0;
  for (const auto& run : result.runs) {
    if (!run.ok()) ++s.failed_runs;
    if (run.iterations_to_threshold) {
      itt_all.push_back(static_cast<double>(*run.iterations_to_threshold));
      itt_reached.push_back(static_cast<double>(*run.iterations_to_threshold));
    } else {
      itt_all.push_back(std::numeric_limits<double>::infinity());
    }
    if (!run.records.empty()) finals.push_back(run.final_cost());
    for (const auto& rec : run.records) {
      cost_sum += rec.mean_cost;
      ++cost_count;
    }
  }
  s.reached = itt_reached.size();
  s.median_iterations_to_threshold = median(itt_all);
  std::tie(s.mean_iterations_to_threshold, s.std_iterations_to_threshold) = mean_std(itt_reached);
  std::tie(s.mean_final_cost, s.std_final_cost) = mean_std(finals);
  s.mean_cost_over_iterations =
      cost_count ? cost_sum / static_cast<double>(cost_count) : std::numeric_limits<double>::quiet_NaN();
  return s;
}

SweepResult sweep(const ExperimentConfig& base, SweepAxis axis, const std::vector<double>& values,
                  const SweepOptions& options) {
  if (values.empty()) throw DomainError("sweep: empty value list");
  if (axis == SweepAxis::grid && options.epsilon_values.empty()) {
    throw DomainError("sweep: grid axis needs epsilon values");
  }
  SweepResult out;
  out.axis = axis;

  const auto run_cell = [&](SweepCell cell, const std::function<ExperimentConfig()>& make) {
    try {
      const ExperimentConfig cfg = make();
      cell.result = run_aspic(cfg, options.jobs);
      cell.summary = summarize(cell.result);
    } catch (const Error& e) {
      cell.error = e.what();
    }
    out.cells.push_back(std::move(cell));
  };

  for (double v : values) {
    switch (axis) {
      case SweepAxis::delta: {
        SweepCell cell;
        cell.delta = v;
        run_cell(std::move(cell), [&] { return with_delta(base, v, options.delta_mode); });
        break;
      }
      case SweepAxis::n: {
        SweepCell cell;
        cell.delta = base.delta.value;
        if (!(v >= 2.0) || v != std::floor(v)) {
          cell.error = "sweep: N must be an integer >= 2";
          out.cells.push_back(std::move(cell));
          break;
        }
        const auto n = static_cast<std::size_t>(v);
        cell.rollouts = n;
        run_cell(std::move(cell), [&] {
          ExperimentConfig c = base;
          c.rollouts = n;
          if (options.rollout_budget) c.iterations = *options.rollout_budget / n;
          return c;
        });
        break;
      }
      case SweepAxis::grid:
        for (double eps : options.epsilon_values) {
          SweepCell cell;
          cell.delta = v;
          cell.epsilon = eps;
          run_cell(std::move(cell), [&] {
            ExperimentConfig c = with_delta(base, v, options.delta_mode);
            c.epsilon = eps;
            return c;
          });
        }
        break;
    }
  }
  return out;
}

}  // namespace aspic
