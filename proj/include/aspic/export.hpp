#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "aspic/runner.hpp"

namespace aspic {

/// Column order of the per-iteration CSV.
inline constexpr const char* kCsvHeader =
    "run,iter,mean_cost,std_cost,alpha,kl_est,eta,achieved_kl,wall_ms,seed";

enum class ExportFormat { csv, json };
ExportFormat export_format_from_string(const std::string& name);

/// One row per IterationRecord, runs in order.
void write_csv(std::ostream& out, const ExperimentResult& result);

/// Per-run final cost, iterations-to-threshold and error, plus the config and its hash.
nlohmann::json summary_json(const ExperimentResult& result);

/// Full result (config, records, final parameters) for later re-export.
nlohmann::json result_to_json(const ExperimentResult& result);
ExperimentResult result_from_json(const nlohmann::json& j);

nlohmann::json sweep_to_json(const SweepResult& sweep);

/// Writes <dir>/<stem>.csv and/or <dir>/<stem>.summary.json; returns the written paths.
std::vector<std::filesystem::path> export_result(const ExperimentResult& result,
                                                 const std::filesystem::path& dir,
                                                 const std::string& stem,
                                                 const std::vector<ExportFormat>& formats);

/// Writes text to a file, raising Error with the path on failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace aspic
