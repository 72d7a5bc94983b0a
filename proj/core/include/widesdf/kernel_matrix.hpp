#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace widesdf {

enum class KernelMatrixKind { StockLevel, PortfolioIS, PortfolioCross };

/// A dense kernel matrix with row and column labels (asset ids or periods).
struct KernelMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  KernelMatrixKind kind = KernelMatrixKind::StockLevel;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
  bool square_labeled() const { return row_labels == col_labels; }
};

struct PsdCheck {
  double max_asymmetry = 0.0;  // max |A_ij - A_ji| / max |A|
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
  bool symmetric = false;
  bool psd = false;
};

/// Symmetry within `symmetry_tol` relative, and every eigenvalue at least
/// -psd_tol * (largest eigenvalue).
PsdCheck check_psd(const Eigen::MatrixXd& values, double symmetry_tol = 1e-10,
                   double psd_tol = 1e-8);

std::string_view to_string(KernelMatrixKind kind);
KernelMatrixKind parse_kernel_matrix_kind(std::string_view name);

/// Default labels "0", "1", ..., "n-1".
std::vector<std::string> index_labels(Eigen::Index n);

}  // namespace widesdf
