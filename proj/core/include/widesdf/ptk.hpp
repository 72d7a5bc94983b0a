#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "widesdf/architecture.hpp"
#include "widesdf/kernel_core.hpp"
#include "widesdf/kernel_matrix.hpp"
#include "widesdf/panel.hpp"

namespace widesdf {

/// Portfolio-kernel entries are divided by N_t1^alpha N_t2^alpha.
struct Normalization {
  double alpha = 0.5;
};

/// Stock-level kernel block K(X, X~) used inside the portfolio contraction.
using BlockKernel = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&, const Eigen::MatrixXd&)>;

/// Block kernel backed by the infinite-width NTK/NNGP recursion.
BlockKernel make_block_kernel(const ArchitectureSpec& arch, KernelType which);

/// Work schedule for the T x T assembly. Each entry of `schedule` is a
/// period pair (t1 <= t2); the upper triangle is covered exactly once. Rows of
/// X_t1 are streamed in slices of at most `max_block_rows`, so the resident
/// stock-level block never exceeds max_block_rows x max N_t doubles.
struct ChunkPlan {
  std::size_t max_block_rows = 0;
  std::vector<std::pair<std::size_t, std::size_t>> schedule;

  /// Pair schedule sized from a memory budget in bytes for one block.
  static ChunkPlan for_panel(const PanelDataset& panel, std::size_t memory_budget_bytes);

  /// Pair schedule with whole-period blocks.
  static ChunkPlan whole_blocks(const PanelDataset& panel);

  /// True when every t1 <= t2 < T appears exactly once.
  bool covers(std::size_t num_periods) const;
};

/// R_t1' K(X_t1, X_t2) R_t2 / (N_t1^alpha N_t2^alpha).
double ptk_entry(std::size_t t1, std::size_t t2, const PanelDataset& panel,
                 const ArchitectureSpec& arch, KernelType which, const Normalization& norm);
double ptk_entry(std::string_view date1, std::string_view date2, const PanelDataset& panel,
                 const ArchitectureSpec& arch, KernelType which, const Normalization& norm);

/// In-sample T x T portfolio kernel. Only t1 <= t2 is computed; the lower
/// triangle is mirrored. `workers` threads take schedule items round-robin;
/// each item writes a disjoint pair of entries, so the result does not
/// depend on the thread count.
KernelMatrix assemble_is_kernel(const PanelDataset& panel, const ArchitectureSpec& arch,
                                KernelType which, const Normalization& norm,
                                const ChunkPlan& plan, int workers = 1);

KernelMatrix assemble_portfolio_kernel(const PanelDataset& panel, const BlockKernel& kernel,
                                       const Normalization& norm, const ChunkPlan& plan,
                                       int workers = 1);

/// Row of portfolio-kernel values between an out-of-sample state (R, X) and
/// every in-sample period.
Eigen::VectorXd cross_kernel_row(const Eigen::VectorXd& r, const Eigen::MatrixXd& X,
                                 const PanelDataset& panel, const ArchitectureSpec& arch,
                                 KernelType which, const Normalization& norm);

Eigen::VectorXd cross_kernel_row(const Eigen::VectorXd& r, const Eigen::MatrixXd& X,
                                 const PanelDataset& panel, const BlockKernel& kernel,
                                 const Normalization& norm);

/// Sidecar metadata of a cached T x T kernel.
struct KernelCacheMeta {
  std::vector<std::string> periods;
  double alpha = 0.5;
  std::string arch_fingerprint;
  std::string kernel_kind;  // "ntk" | "nngp" | free-form for other kernels
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;

  bool operator==(const KernelCacheMeta&) const = default;
};

/// Writes `<stem>.bin` (little-endian float64, row-major) and `<stem>.json`.
void save_kernel_cache(const std::filesystem::path& stem, const KernelMatrix& kernel,
                       const KernelCacheMeta& meta);

struct KernelCacheEntry {
  KernelMatrix kernel;
  KernelCacheMeta meta;
};
KernelCacheEntry load_kernel_cache(const std::filesystem::path& stem);

}  // namespace widesdf
