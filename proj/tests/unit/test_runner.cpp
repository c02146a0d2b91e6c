#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "aspic/config.hpp"
#include "aspic/errors.hpp"
#include "aspic/export.hpp"
#include "aspic/runner.hpp"

using namespace aspic;
using nlohmann::json;

namespace {

const std::filesystem::path kPresets = ASPIC_PRESET_DIR;

// Two viapoints over one second: cheap enough for many full runs.
json tiny_lq_json() {
  return json{{"name", "tiny"},
              {"env", {{"id", "lq_viapoints"},
                       {"overrides", {{"horizon", 1.0}, {"viapoints", {{0.5, 2.0}, {1.0, -1.0}}}, {"sigma", 0.5}}}}},
              {"rollouts", 8},
              {"iterations", 3},
              {"epsilon", 0.1},
              {"delta", {{"lognfrac", 0.2}}},
              {"solver", {{"kind", "cg"}, {"iterations", 2}, {"blockwise", true}}},
              {"seed", 5},
              {"repeats", 2}};
}

ExperimentConfig tiny_lq() { return config_from_json(tiny_lq_json()); }

bool same_records(const RunResult& a, const RunResult& b) {
  if (a.records.size() != b.records.size() || a.seed != b.seed) return false;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const IterationRecord& x = a.records[i];
    const IterationRecord& y = b.records[i];
    if (x.run != y.run || x.iteration != y.iteration || x.mean_cost != y.mean_cost ||
        x.std_cost != y.std_cost || x.alpha != y.alpha || x.kl_estimate != y.kl_estimate ||
        x.eta != y.eta || x.achieved_kl != y.achieved_kl || x.seed != y.seed) {
      return false;
    }
  }
  return a.final_params == b.final_params;
}

std::size_t count_lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("aspic_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("presets carry the published settings") {
  const ExperimentConfig lq = load_config((kPresets / "lq_viapoints.json").string());
  CHECK(lq.env_id == "lq_viapoints");
  CHECK(lq.rollouts == 100);
  CHECK(lq.epsilon == 0.1);
  CHECK(lq.delta.mode == DeltaSpec::Mode::lognfrac);
  CHECK(lq.delta.value == 0.2);
  CHECK(lq.delta.resolve(lq.rollouts) == doctest::Approx(0.2 * std::log(100.0)));
  CHECK(lq.gamma == 1.0);
  CHECK(lq.solver.kind == SolverKind::cg);
  CHECK(lq.solver.cg_iterations == 2);
  CHECK(lq.threshold.value() == 20000.0);
  const auto lq_env = make_environment(lq.env_id, lq.env_overrides);
  CHECK(lq_env->dt() == 0.1);
  CHECK(lq_env->horizon() == 10.0);

  for (const char* name : {"pendulum.json", "acrobot.json"}) {
    const ExperimentConfig c = load_config((kPresets / name).string());
    CHECK(c.rollouts == 500);
    CHECK(c.epsilon == 0.1);
    CHECK(c.delta.mode == DeltaSpec::Mode::absolute);
    CHECK(c.delta.value == 0.5);
    CHECK(c.gamma == 1.0);
    CHECK(c.solver.kind == SolverKind::per_timestep_pinv);
    CHECK(c.solver.rcond == 1e-4);
    const auto env = make_environment(c.env_id, c.env_overrides);
    CHECK(env->dt() == 0.01);
    CHECK(env->horizon() == 3.0);
    CHECK(env->nu() == 1.0);
  }
}

TEST_CASE("config parsing is strict") {
  json j = tiny_lq_json();
  j["rollout"] = 5;
  CHECK_THROWS_AS(config_from_json(j), StructuralError);

  j = tiny_lq_json();
  j["env"]["overrides"]["sigmaa"] = 1.0;
  CHECK_THROWS_AS(config_from_json(j), StructuralError);

  j = tiny_lq_json();
  j["env"] = "cartpole";
  CHECK_THROWS_AS(config_from_json(j), StructuralError);

  j = tiny_lq_json();
  j["rollouts"] = 1;
  CHECK_THROWS_AS(config_from_json(j), DomainError);

  j = tiny_lq_json();
  j["epsilon"] = 0.0;
  CHECK_THROWS_AS(config_from_json(j), DomainError);

  j = tiny_lq_json();
  j["delta"] = {{"absolute", 0.5}, {"lognfrac", 0.2}};
  CHECK_THROWS_AS(config_from_json(j), StructuralError);

  j = tiny_lq_json();
  j["delta"] = 0.0;
  CHECK_THROWS_AS(config_from_json(j), DomainError);
  j["estimator"] = "direct";
  CHECK_NOTHROW(config_from_json(j));

  j = tiny_lq_json();
  j["policy"] = {{"family", "mlp"}};
  j["solver"] = {{"kind", "per_timestep_pinv"}};
  CHECK_THROWS_AS(config_from_json(j), StructuralError);

  j = tiny_lq_json();
  j["estimator"] = "pice";
  j["gamma"] = 0.0;
  CHECK_THROWS_AS(config_from_json(j), DomainError);

  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), Error);
}

TEST_CASE("delta accepts both conventions") {
  json j = tiny_lq_json();
  j["delta"] = 0.7;
  ExperimentConfig c = config_from_json(j);
  CHECK(c.delta.mode == DeltaSpec::Mode::absolute);
  CHECK(c.delta.resolve(1000) == 0.7);
  j["delta"] = {{"lognfrac", 0.5}};
  c = config_from_json(j);
  CHECK(c.delta.resolve(100) == doctest::Approx(0.5 * std::log(100.0)));
}

TEST_CASE("config round trip keeps the hash") {
  const ExperimentConfig c = tiny_lq();
  const ExperimentConfig again = config_from_json(config_to_json(c));
  CHECK(config_hash(again) == config_hash(c));
  CHECK(config_hash(c).size() == 40);
  ExperimentConfig other = c;
  other.seed += 1;
  CHECK(config_hash(other) != config_hash(c));
}

TEST_CASE("git blob hash matches git hash-object") {
  CHECK(git_blob_sha1("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  CHECK(git_blob_sha1("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST_CASE("parameter checkpoints round trip") {
  const auto env = make_environment("pendulum");
  const GaussianPolicy lin = make_linear_policy(*env).with_params(Eigen::VectorXd::LinSpaced(1200, -1.0, 1.0));
  CHECK(params_from_json(params_to_json(lin), lin.mean_function()) == lin.params());
  const GaussianPolicy mlp = make_mlp_policy(*env, {4, 3}, 9);
  const json j = params_to_json(mlp);
  CHECK(j.at("shape") == json({2, 4, 3, 1}));
  CHECK(params_from_json(j, mlp.mean_function()) == mlp.params());
  CHECK_THROWS_AS(params_from_json(j, lin.mean_function()), StructuralError);
}

TEST_CASE("runs are deterministic in the config") {
  const ExperimentConfig c = tiny_lq();
  const ExperimentResult a = run_aspic(c, 1);
  const ExperimentResult b = run_aspic(c, 1);
  const ExperimentResult threaded = run_aspic(c, 2);
  REQUIRE(a.runs.size() == 2);
  for (std::size_t r = 0; r < 2; ++r) {
    CHECK(same_records(a.runs[r], b.runs[r]));
    CHECK(same_records(a.runs[r], threaded.runs[r]));
  }
  CHECK_FALSE(same_records(a.runs[0], a.runs[1]));
  CHECK(a.runs[0].seed == run_seed(c, 0));
}

TEST_CASE("rollout budget is repeats x iterations x N") {
  const ExperimentConfig c = tiny_lq();
  const ExperimentResult res = run_aspic(c);
  std::size_t total = 0;
  for (const auto& run : res.runs) {
    CHECK(run.records.size() == c.iterations);
    CHECK(run.rollouts_simulated == c.iterations * c.rollouts);
    total += run.rollouts_simulated;
  }
  CHECK(total == c.repeats * c.iterations * c.rollouts);
}

TEST_CASE("iteration records are consistent") {
  ExperimentConfig c = tiny_lq();
  c.iterations = 6;
  const double delta = c.delta.resolve(c.rollouts);
  const RunResult run = run_single(c, 0);
  REQUIRE(run.ok());
  for (std::size_t i = 0; i < run.records.size(); ++i) {
    const IterationRecord& r = run.records[i];
    CHECK(r.iteration == i);
    CHECK(r.run == 0);
    CHECK(r.kl_estimate <= delta);
    CHECK(r.alpha >= 0.0);
    CHECK(std::abs(r.achieved_kl - c.epsilon) <= 0.1 * c.epsilon);
    CHECK(r.std_cost >= 0.0);
    CHECK(r.wall_ms >= 0.0);
  }
  CHECK(run.final_cost() == run.records.back().mean_cost);

  c.estimator = EstimatorKind::direct;
  for (const auto& r : run_single(c, 0).records) {
    CHECK(r.alpha == 0.0);
    CHECK(r.kl_estimate == 0.0);
  }
  c.estimator = EstimatorKind::pice;
  CHECK(run_single(c, 0).ok());
}

TEST_CASE("observer sees every record") {
  const ExperimentConfig c = tiny_lq();
  std::size_t seen = 0;
  const RunResult run = run_single(c, 1, [&](const IterationRecord& r) { CHECK(r.iteration == seen++); });
  CHECK(seen == run.records.size());
}

TEST_CASE("a zero gradient leaves the parameters untouched") {
  json j = tiny_lq_json();
  j["env"]["overrides"]["viapoints"] = json::array();
  j["gamma"] = 0.0;
  j["iterations"] = 1;
  const ExperimentConfig c = config_from_json(j);
  const RunResult run = run_single(c, 0);
  REQUIRE(run.ok());
  CHECK(run.records[0].eta == 0.0);
  CHECK(run.final_params.norm() == 0.0);
}

TEST_CASE("delta above log N degrades to the alpha floor") {
  json j = tiny_lq_json();
  j["delta"] = {{"absolute", 10.0}};
  const RunResult run = run_single(config_from_json(j), 0);
  REQUIRE(run.ok());
  for (const auto& r : run.records) CHECK(r.alpha == 0.0);
}

TEST_CASE("a diverging run keeps its error and partial records") {
  json j = tiny_lq_json();
  j["env"]["overrides"]["x0"] = 1e9;
  const ExperimentResult res = run_aspic(config_from_json(j));
  CHECK_FALSE(res.ok());
  for (const auto& run : res.runs) {
    CHECK_FALSE(run.ok());
    CHECK(run.error.find("rollout 0") != std::string::npos);
    CHECK(run.records.empty());
  }
}

TEST_CASE("threshold bookkeeping") {
  ExperimentConfig c = tiny_lq();
  c.iterations = 5;
  c.threshold = std::numeric_limits<double>::infinity();
  RunResult run = run_single(c, 0);
  CHECK(run.iterations_to_threshold.value() == 0);
  CHECK(run.records.size() == 5);
  c.stop_at_threshold = true;
  run = run_single(c, 0);
  CHECK(run.records.size() == 1);
  c.threshold = -1e300;
  CHECK_FALSE(run_single(c, 0).iterations_to_threshold.has_value());
}

TEST_CASE("summaries count unreached runs as infinite") {
  ExperimentResult res;
  res.config = tiny_lq();
  for (std::optional<std::size_t> itt : {std::optional<std::size_t>(10), std::optional<std::size_t>(),
                                         std::optional<std::size_t>(30)}) {
    RunResult r;
    r.iterations_to_threshold = itt;
    IterationRecord rec;
    rec.mean_cost = 4.0;
    r.records.push_back(rec);
    res.runs.push_back(r);
  }
  CellSummary s = summarize(res);
  CHECK(s.median_iterations_to_threshold == 30.0);
  CHECK(s.reached == 2);
  CHECK(s.mean_iterations_to_threshold == 20.0);
  CHECK(s.mean_final_cost == 4.0);
  CHECK(s.failed_runs == 0);
  res.runs[0].iterations_to_threshold.reset();
  s = summarize(res);
  CHECK(std::isinf(s.median_iterations_to_threshold));
}

TEST_CASE("single-value sweep equals a plain run") {
  const ExperimentConfig c = tiny_lq();
  const SweepResult sw = sweep(c, SweepAxis::delta, {0.2});
  REQUIRE(sw.cells.size() == 1);
  const ExperimentResult plain = run_aspic(c);
  for (std::size_t r = 0; r < plain.runs.size(); ++r) {
    CHECK(same_records(sw.cells[0].result.runs[r], plain.runs[r]));
  }
}

TEST_CASE("sweep axes") {
  const ExperimentConfig c = tiny_lq();
  const SweepResult d = sweep(c, SweepAxis::delta, {0.0, 0.5});
  CHECK(d.cells[0].result.config.estimator == EstimatorKind::direct);
  CHECK(d.cells[1].result.config.estimator == EstimatorKind::smoothed);
  CHECK(d.cells[1].result.config.delta.value == 0.5);

  SweepOptions budget;
  budget.rollout_budget = 48;
  const SweepResult n = sweep(c, SweepAxis::n, {1.0, 8.0, 16.0}, budget);
  REQUIRE(n.cells.size() == 3);
  CHECK_FALSE(n.cells[0].error.empty());
  CHECK(n.cells[1].error.empty());
  CHECK(n.cells[1].result.config.iterations == 6);
  CHECK(n.cells[2].result.config.iterations == 3);
  for (const auto& run : n.cells[2].result.runs) CHECK(run.rollouts_simulated == 48);

  SweepOptions grid;
  grid.epsilon_values = {0.05, 0.2};
  const SweepResult g = sweep(c, SweepAxis::grid, {0.1, 0.3}, grid);
  REQUIRE(g.cells.size() == 4);
  CHECK(g.cells[3].epsilon.value() == 0.2);
  CHECK(g.cells[3].result.config.epsilon == 0.2);
  CHECK(g.cells[2].delta == 0.3);

  CHECK_THROWS_AS(sweep(c, SweepAxis::grid, {0.1}), DomainError);
  CHECK_THROWS_AS(sweep(c, SweepAxis::delta, {}), DomainError);
  CHECK(sweep_axis_from_string("n") == SweepAxis::n);
  CHECK_THROWS_AS(sweep_axis_from_string("epsilon"), DomainError);
  CHECK(sweep_to_json(g).at("cells").size() == 4);
}

TEST_CASE("CSV export") {
  ExperimentResult empty;
  empty.config = tiny_lq();
  std::ostringstream out;
  write_csv(out, empty);
  CHECK(out.str() == std::string(kCsvHeader) + "\n");
  CHECK(std::string(kCsvHeader) == "run,iter,mean_cost,std_cost,alpha,kl_est,eta,achieved_kl,wall_ms,seed");

  const ExperimentResult res = run_aspic(tiny_lq());
  std::ostringstream csv;
  write_csv(csv, res);
  CHECK(count_lines(csv.str()) == 1 + 6);
  std::istringstream lines(csv.str());
  std::string header;
  std::string row;
  std::getline(lines, header);
  std::getline(lines, row);
  CHECK(std::count(row.begin(), row.end(), ',') == 9);
  CHECK(row.rfind("0,0,", 0) == 0);
}

TEST_CASE("summary and result JSON round trips") {
  const ExperimentResult res = run_aspic(tiny_lq());
  const json summary = json::parse(summary_json(res).dump());
  CHECK(summary.at("config_hash") == config_hash(res.config));
  CHECK(config_hash(config_from_json(summary.at("config"))) == summary.at("config_hash"));
  CHECK(summary.at("runs").size() == 2);
  CHECK(summary.at("ok") == true);

  const ExperimentResult back = result_from_json(json::parse(result_to_json(res).dump()));
  REQUIRE(back.runs.size() == res.runs.size());
  for (std::size_t r = 0; r < res.runs.size(); ++r) {
    CHECK(same_records(back.runs[r], res.runs[r]));
  }
}

TEST_CASE("export writes files and reports bad paths") {
  const auto dir = scratch_dir("export");
  const ExperimentResult res = run_aspic(tiny_lq());
  const auto written = export_result(res, dir, "tiny", {ExportFormat::csv, ExportFormat::json});
  REQUIRE(written.size() == 2);
  CHECK(std::filesystem::exists(dir / "tiny.csv"));
  CHECK(std::filesystem::exists(dir / "tiny.summary.json"));
  std::ifstream in(dir / "tiny.summary.json");
  CHECK(json::parse(in).at("config_hash") == config_hash(res.config));

  std::filesystem::create_directories(dir / "blocker");
  try {
    write_text_file(dir / "blocker", "text");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("blocker") != std::string::npos);
  }
  CHECK(export_format_from_string("csv") == ExportFormat::csv);
  CHECK_THROWS_AS(export_format_from_string("xml"), DomainError);
}
