#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace widesdf {

/// Annualized Sharpe ratio mean / std * sqrt(12) with the n-1 sample std.
/// Returns nullopt when the series has zero variance. Throws
/// std::invalid_argument for fewer than 2 observations or non-finite input.
std::optional<double> sharpe(const Eigen::VectorXd& monthly);
std::optional<double> sharpe(const std::vector<double>& monthly);

/// Raised when the regression design is rank deficient. `columns` lists the
/// 0-based factor columns that are linear combinations of the intercept and
/// the columns before them.
class RankDeficientError : public std::runtime_error {
 public:
  RankDeficientError(const std::string& what, std::vector<int> columns)
      : std::runtime_error(what), columns_(std::move(columns)) {}
  const std::vector<int>& columns() const { return columns_; }

 private:
  std::vector<int> columns_;
};

struct AlphaRegression {
  double alpha = 0.0;
  double alpha_se = 0.0;
  double t_stat = 0.0;  // alpha / alpha_se; +-inf for an exact nonzero fit, NaN for 0/0
  Eigen::VectorXd betas;
  Eigen::VectorXd residuals;
  int num_obs = 0;
};

/// OLS of y on [1, F]. With hac_lags == 0 the standard errors are classical,
/// se^2 = s^2 ((X'X)^-1)_00 with s^2 = RSS / (n - k - 1). With hac_lags > 0
/// they are Newey-West: (X'X)^-1 S (X'X)^-1 with Bartlett weights
/// 1 - l / (hac_lags + 1) and no small-sample correction.
/// Requires n > k + 1 and k >= 1.
AlphaRegression alpha_regression(const Eigen::VectorXd& y, const Eigen::MatrixXd& factors,
                                 int hac_lags = 0);

}  // namespace widesdf
