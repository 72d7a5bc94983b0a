#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "widesdf/backtest.hpp"

namespace widesdf {

/// Per-cell summary as written to summary.json.
struct CellSummary {
  std::string label;
  std::string arch_fingerprint;
  int depth = 0;
  std::string activation;
  std::string kernel;
  std::string mode;  // "ridge" | "gradient_flow"
  double z = 0.0;
  double eta = 0.0;
  double s = 0.0;
  int num_months = 0;
  double mean = 0.0;
  std::optional<double> sharpe;
  std::optional<double> alpha;
  std::optional<double> alpha_t_stat;
  std::vector<double> betas;
  std::string alpha_error;

  bool operator==(const CellSummary&) const = default;
};

struct ReportSummary {
  std::string config_hash;
  std::string data_hash;
  std::size_t windows = 0;
  std::size_t kernel_assemblies = 0;
  std::vector<std::string> factor_names;
  std::vector<CellSummary> cells;

  bool operator==(const ReportSummary&) const = default;
};

ReportSummary summarize(const BacktestReport& report);

/// Writes into `dir` (created if needed):
///   series.csv      date, cell, depth, activation, kernel, mode, z, eta, s, return
///   summary.json    ReportSummary
///   depth_plot.csv  kernel, mode, z, eta, s, activation, depth, sharpe, alpha, alpha_t_stat
/// Numbers use 17 significant digits; an absent statistic is an empty field.
/// Throws std::runtime_error when a file cannot be written.
void emit_report(const BacktestReport& report, const std::filesystem::path& dir);

std::string summary_json(const ReportSummary& summary);
ReportSummary parse_summary_json(const std::string& text);
ReportSummary read_summary_json(const std::filesystem::path& path);

}  // namespace widesdf
