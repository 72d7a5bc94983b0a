#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "widesdf/architecture.hpp"
#include "widesdf/kernel_core.hpp"
#include "widesdf/panel.hpp"
#include "widesdf/ptk.hpp"
#include "widesdf/sdf_solver.hpp"
#include "widesdf/stats.hpp"

namespace widesdf {

/// Nine-point grid 10^-5 .. 10^3 of pooled ridge penalties.
std::vector<double> default_ridge_grid();

/// Depths 1, 2, 4, ..., 128.
std::vector<int> default_depth_grid();

struct BacktestConfig {
  int window_T = 12;
  /// Pooled penalties z in (K + z I)^-1 1 with K the raw T x T kernel.
  std::vector<double> ridge_grid = default_ridge_grid();
  int retrain_every = 6;
  Normalization norm{};
  std::vector<ArchitectureSpec> architectures;
  std::vector<KernelType> kernels = {KernelType::NTK};
  /// RidgeMode sweeps ridge_grid (its z is ignored); GradientFlowMode gives a
  /// single cell per (arch, kernel).
  WeightMode weight_mode = RidgeMode{};
  /// Newey-West lags for alpha standard errors; 0 gives classical errors.
  int hac_lags = 0;
  int workers = 1;
  std::size_t memory_budget_bytes = std::size_t{256} << 20;
  /// Reuse or store in-sample kernels here when set.
  std::optional<std::filesystem::path> cache_dir;

  /// Throws std::invalid_argument.
  void validate() const;
  /// Canonical text of every field that affects results (not workers or cache).
  std::string canonical_text() const;
  std::string fingerprint() const;
};

/// Benchmark factor returns by date.
struct FactorTable {
  std::vector<std::string> dates;
  std::vector<std::string> names;
  Eigen::MatrixXd values;  // dates x factors

  /// CSV with a "date" column followed by factor columns.
  static FactorTable read_csv(const std::filesystem::path& path);
};

struct CellResult {
  std::size_t arch_index = 0;
  ArchitectureSpec arch;
  KernelType kernel = KernelType::NTK;
  WeightMode mode;
  std::vector<std::string> dates;   // out-of-sample months
  std::vector<double> returns;
  std::vector<std::string> formation_dates;
  std::vector<Eigen::VectorXd> weights;  // per formation
  std::optional<double> sharpe;
  std::optional<AlphaRegression> alpha;
  std::string alpha_error;  // set when the regression could not run

  std::string label() const;
};

struct BacktestReport {
  std::vector<CellResult> cells;  // arch-major, then kernel, then weight mode
  std::vector<std::string> factor_names;
  std::string config_hash;
  std::string data_hash;
  std::size_t windows = 0;
  std::size_t kernel_assemblies = 0;
  std::size_t kernel_cache_hits = 0;
};

/// Formation months m = T, T + retrain_every, ... (period indices). Each uses
/// periods [m - T, m - 1] and serves months m .. m + retrain_every - 1.
std::vector<std::size_t> formation_indices(std::size_t num_periods, const BacktestConfig& config);

/// File stem of a cached in-sample kernel for a window.
std::filesystem::path kernel_cache_stem(const std::filesystem::path& dir, const PanelDataset& window,
                                        const ArchitectureSpec& arch, KernelType which,
                                        const Normalization& norm);

/// Loads the window kernel from the cache when present and matching,
/// otherwise assembles it (and stores it when a cache dir is given).
/// `assembled` is set to whether an assembly happened.
KernelMatrix window_kernel(const PanelDataset& window, const ArchitectureSpec& arch, KernelType which,
                           const Normalization& norm, std::size_t memory_budget_bytes,
                           const std::optional<std::filesystem::path>& cache_dir, bool& assembled);

/// Rolling out-of-sample evaluation. (window, arch, kernel) jobs are spread
/// over config.workers threads; results are merged in a fixed order, so the
/// report does not depend on the thread count. Throws std::invalid_argument
/// when the panel has fewer than window_T + 2 periods.
BacktestReport rolling_backtest(const PanelDataset& panel, const BacktestConfig& config,
                                const FactorTable* factors = nullptr);

}  // namespace widesdf
