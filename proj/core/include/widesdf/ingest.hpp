#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "widesdf/panel.hpp"

namespace widesdf {

/// Column layout of a raw characteristics file:
/// date, asset_id, ret_excess_next, then one column per characteristic.
struct IngestSchema {
  std::string date_column = "date";
  std::string asset_column = "asset_id";
  std::string return_column = "ret_excess_next";
  /// Rows whose share of missing characteristics exceeds this are dropped.
  double max_missing_fraction = 1.0 / 3.0;
  /// Tokens read as missing (besides the empty field).
  std::vector<std::string> missing_tokens = {"NA", "NaN", "nan", "."};
};

struct RejectedRow {
  std::size_t line = 0;  // 1-based, header is line 1
  std::string reason;
  std::string text;
};

struct IngestReport {
  std::vector<RejectedRow> rejects;
  std::size_t rows_read = 0;
  std::size_t rows_dropped_missing = 0;
  std::size_t values_imputed = 0;
};

struct IngestResult {
  PanelDataset panel;
  IngestReport report;
};

/// Average-rank map onto [-0.5, 0.5]: (rank - 1) / (n - 1) - 0.5.
/// A single value maps to 0.
std::vector<double> rank_standardize(std::span<const double> values);

/// Reads a raw panel, drops rows with too many missing characteristics,
/// rank-standardizes each characteristic within each date and imputes the
/// remaining gaps with 0. Periods are ordered by date string; rows keep file
/// order inside a period. Unparsable rows go to the rejects report.
/// Throws std::runtime_error when the file cannot be read, the header does not
/// match, or a date is left with no rows.
IngestResult ingest_csv(const std::filesystem::path& path, const IngestSchema& schema = {});

/// Already-standardized panel in the same column layout, values at 17
/// significant digits.
void write_panel_csv(const std::filesystem::path& path, const PanelDataset& panel);

/// Reads a file written by write_panel_csv without re-standardizing.
PanelDataset read_panel_csv(const std::filesystem::path& path);

void write_rejects_csv(const std::filesystem::path& path, const std::vector<RejectedRow>& rejects);

/// Splits one CSV record. Double quotes group fields and "" escapes a quote.
std::vector<std::string> split_csv_line(std::string_view line);

/// Renders a double with 17 significant digits.
std::string format_double(double value);

}  // namespace widesdf
