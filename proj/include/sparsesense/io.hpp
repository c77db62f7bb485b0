// CSV panel ingestion and report emission.
//
// Wide panel format:
//
//   cycle,<name_0>,...,<name_{S-1}>
//   coord,<x:y>,...,<x:y>          (optional)
//   0,<v>,...,<v>
//   1,<v>,...
//
// An empty field is a missing measurement; cycles run 0,1,2,... in order.
//
// Long panel format (`cycle,station,value` rows) is pivoted to wide with
// stations ordered by first appearance.
#pragma once

#include "sparsesense/simulate.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace sparsesense {

MeasurementPanel parse_panel_csv_text(const std::string &text);
MeasurementPanel parse_panel_csv(const std::filesystem::path &path);

/// Duplicate (cycle, station) pairs are a parse error.
MeasurementPanel parse_long_csv_text(const std::string &text);
MeasurementPanel parse_long_csv(const std::filesystem::path &path);

std::string format_panel_csv(const MeasurementPanel &panel);
void write_panel_csv(const MeasurementPanel &panel, const std::filesystem::path &path);

/// `strategy,param,mean_rmse,stddev,repeats`, sorted by (strategy, param),
/// four decimals.
std::string format_report_csv(std::vector<ReportRow> rows);
void write_report_csv(std::vector<ReportRow> rows, const std::filesystem::path &path);

/// `t,cycle_rmse,lambda_tu,lambda_if,lambda_at`, six decimals; unscored
/// cycles leave cycle_rmse empty.
std::string format_series_csv(std::span<const CycleReport> reports);
void write_series_csv(std::span<const CycleReport> reports,
                      const std::filesystem::path &path);

/// `location,lag,phi,weight_kind,seed` rows of a synthetic ground truth.
std::string format_truth_csv(const DsarModel &truth, SyntheticWeights kind,
                             std::uint64_t seed);

/// Writes `content` to `path` exactly; throws IoError on failure.
void write_text(const std::filesystem::path &path, const std::string &content);

/// Reproducibility record written next to the outputs of a CLI run.
struct RunManifest {
    std::string config_checksum;
    std::uint64_t seed = 0;
    std::string started;
    std::string finished;
    std::vector<std::string> artifacts; ///< relative to the output directory

    std::string format() const;
};

/// UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

} // namespace sparsesense
