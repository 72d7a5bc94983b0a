#include "widesdf/stats.hpp"

#include <cmath>
#include <limits>

namespace widesdf {

std::optional<double> sharpe(const Eigen::VectorXd& monthly) {
  const Eigen::Index n = monthly.size();
  if (n < 2) throw std::invalid_argument("sharpe: need at least 2 observations");
  if (!monthly.allFinite()) throw std::invalid_argument("sharpe: non-finite observation");
  const double mean = monthly.mean();
  const double var = (monthly.array() - mean).square().sum() / static_cast<double>(n - 1);
  // rounding leaves ~1e-30 variance on numerically constant series
  if (!(var > 1e-28 * std::max(1.0, mean * mean))) return std::nullopt;
  return mean / std::sqrt(var) * std::sqrt(12.0);
}

std::optional<double> sharpe(const std::vector<double>& monthly) {
  return sharpe(Eigen::Map<const Eigen::VectorXd>(monthly.data(),
                                                   static_cast<Eigen::Index>(monthly.size())));
}

AlphaRegression alpha_regression(const Eigen::VectorXd& y, const Eigen::MatrixXd& factors,
                                 int hac_lags) {
  const Eigen::Index n = y.size();
  const Eigen::Index k = factors.cols();
  if (factors.rows() != n) throw std::invalid_argument("alpha_regression: rows differ from series length");
  if (k < 1) throw std::invalid_argument("alpha_regression: need at least one factor");
  if (n <= k + 1) throw std::invalid_argument("alpha_regression: need more than k + 1 observations");
  if (hac_lags < 0 || hac_lags >= n) throw std::invalid_argument("alpha_regression: hac_lags must lie in [0, n)");
  if (!y.allFinite() || !factors.allFinite()) {
    throw std::invalid_argument("alpha_regression: non-finite input");
  }

  Eigen::MatrixXd X(n, k + 1);
  X.col(0).setOnes();
  X.rightCols(k) = factors;

  // Gram-Schmidt pass in column order: a column whose residual against the
  // earlier ones vanishes is collinear with them.
  std::vector<int> collinear;
  Eigen::MatrixXd basis(n, 0);
  for (Eigen::Index j = 0; j <= k; ++j) {
    Eigen::VectorXd v = X.col(j);
    const double norm0 = v.norm();
    for (int pass = 0; pass < 2; ++pass) v -= basis * (basis.transpose() * v);
    if (!(v.norm() > 1e-10 * std::max(norm0, 1e-300))) {
      if (j > 0) collinear.push_back(static_cast<int>(j - 1));
      continue;
    }
    basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
    basis.col(basis.cols() - 1) = v / v.norm();
  }
  if (!collinear.empty()) {
    std::string msg = "alpha_regression: rank-deficient design; collinear factor columns:";
    for (int c : collinear) msg += " " + std::to_string(c);
    throw RankDeficientError(msg, collinear);
  }

  const Eigen::MatrixXd xtx = X.transpose() * X;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(xtx);
  const Eigen::VectorXd coef = X.colPivHouseholderQr().solve(y);
  AlphaRegression out;
  out.num_obs = static_cast<int>(n);
  out.alpha = coef(0);
  out.betas = coef.tail(k);
  out.residuals = y - X * coef;
  const Eigen::VectorXd e0 = Eigen::VectorXd::Unit(k + 1, 0);
  if (hac_lags == 0) {
    const double s2 = out.residuals.squaredNorm() / static_cast<double>(n - k - 1);
    out.alpha_se = std::sqrt(s2 * ldlt.solve(e0)(0));
  } else {
    const Eigen::MatrixXd Xe = X.array().colwise() * out.residuals.array();  // rows e_t x_t'
    Eigen::MatrixXd S = Xe.transpose() * Xe;
    for (int l = 1; l <= hac_lags; ++l) {
      const double w = 1.0 - static_cast<double>(l) / (hac_lags + 1);
      const Eigen::MatrixXd G = Xe.bottomRows(n - l).transpose() * Xe.topRows(n - l);
      S += w * (G + G.transpose());
    }
    const Eigen::VectorXd a = ldlt.solve(e0);  // row 0 of (X'X)^-1
    out.alpha_se = std::sqrt(std::max(a.dot(S * a), 0.0));
  }
  out.t_stat = out.alpha / out.alpha_se;
  return out;
}

}  // namespace widesdf
