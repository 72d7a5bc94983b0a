#include "widesdf/kernel_matrix.hpp"

#include <stdexcept>

namespace widesdf {

PsdCheck check_psd(const Eigen::MatrixXd& values, double symmetry_tol, double psd_tol) {
  if (values.rows() != values.cols()) {
    throw std::invalid_argument("check_psd: matrix is not square");
  }
  PsdCheck out;
  if (values.size() == 0) {
    out.symmetric = out.psd = true;
    return out;
  }
  const double scale = values.cwiseAbs().maxCoeff();
  const double asym = (values - values.transpose()).cwiseAbs().maxCoeff();
  out.max_asymmetry = scale > 0.0 ? asym / scale : asym;
  out.symmetric = out.max_asymmetry <= symmetry_tol;

  const Eigen::MatrixXd sym = 0.5 * (values + values.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
  out.min_eigenvalue = eig.eigenvalues().minCoeff();
  out.max_eigenvalue = eig.eigenvalues().maxCoeff();
  const double top = std::max(out.max_eigenvalue, 0.0);
  out.psd = out.min_eigenvalue >= -psd_tol * top;
  return out;
}

std::string_view to_string(KernelMatrixKind kind) {
  switch (kind) {
    case KernelMatrixKind::StockLevel:
      return "stock_level";
    case KernelMatrixKind::PortfolioIS:
      return "portfolio_is";
    case KernelMatrixKind::PortfolioCross:
      return "portfolio_cross";
  }
  return "unknown";
}

KernelMatrixKind parse_kernel_matrix_kind(std::string_view name) {
  if (name == "stock_level") return KernelMatrixKind::StockLevel;
  if (name == "portfolio_is") return KernelMatrixKind::PortfolioIS;
  if (name == "portfolio_cross") return KernelMatrixKind::PortfolioCross;
  throw std::invalid_argument("unknown kernel matrix kind: " + std::string(name));
}

std::vector<std::string> index_labels(Eigen::Index n) {
  std::vector<std::string> labels;
  labels.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) labels.push_back(std::to_string(i));
  return labels;
}

}  // namespace widesdf
