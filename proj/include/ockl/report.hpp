#pragma once

// Run outputs: metrics.csv, summary.json, manifest.json and plotdata/.

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "ockl/scheduler.hpp"

namespace ockl {

inline constexpr const char* kMetricsHeader =
    "t,em,bwt,fwt,kar,kg_alignment,kg_forgetting,kg_updating,tokens_trained,train_time_s,"
    "discarded_items";

// "%.10g"; undefined values print as "nan".
std::string format_number(double value);

std::string metrics_csv_row(const MetricsRecord& record);
void write_metrics_csv(const std::vector<MetricsRecord>& records, std::ostream& out);

nlohmann::json summarize(const RunResult& result);

// Creates `dir` if needed and writes every output file.
void write_run(const RunResult& result, const std::filesystem::path& dir);

// Re-reads metrics.csv from a run directory.
std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path);

// Summary of a finished run directory (recomputed from metrics.csv and
// checked against summary.json when present).
nlohmann::json report_run(const std::filesystem::path& dir);

struct SweepCell {
  double ratio = 1.0;
  std::optional<RunResult> result;
  std::string error;  // set when the cell failed
};

inline constexpr double kSweepRatios[] = {0.25, 0.5, 0.75, 1.0};

// Runs the base config once per ratio with k-center selection. A failed
// cell records its error and the others continue.
std::vector<SweepCell> ratio_sweep(const RunConfig& base);

void write_sweep_table(const std::vector<SweepCell>& cells, std::ostream& out);

}  // namespace ockl
