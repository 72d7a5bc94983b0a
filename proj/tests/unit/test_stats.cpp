#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "widesdf/stats.hpp"

using namespace widesdf;

TEST(Sharpe, Arithmetic) {
  // mean 0.01, sample std 0.02
  const std::vector<double> s{0.01 - 0.02 / std::sqrt(2.0), 0.01 + 0.02 / std::sqrt(2.0), 0.01};
  const double std_n1 = std::sqrt((0.0004 / 2 + 0.0004 / 2) / 2.0);
  EXPECT_NEAR(*sharpe(s), 0.01 / std_n1 * std::sqrt(12.0), 1e-12);
  const std::vector<double> t{0.01 + 0.02, 0.01 - 0.02};  // std = 0.02 * sqrt(2)
  EXPECT_NEAR(*sharpe(t), 0.01 / (0.02 * std::sqrt(2.0)) * std::sqrt(12.0), 1e-12);
}

TEST(Sharpe, HalfSqrtTwelve) {
  // symmetric two-point series with mean 0.01 and sample std exactly 0.02
  std::vector<double> s;
  for (int i = 0; i < 50; ++i) {
    s.push_back(0.01 + 0.02 * std::sqrt(99.0 / 100.0));
    s.push_back(0.01 - 0.02 * std::sqrt(99.0 / 100.0));
  }
  EXPECT_NEAR(*sharpe(s), 0.5 * std::sqrt(12.0), 1e-12);
}

TEST(Sharpe, ConstantSeriesIsFlagged) {
  EXPECT_FALSE(sharpe(std::vector<double>(10, 0.02)).has_value());
  EXPECT_FALSE(sharpe(std::vector<double>(10, 0.0)).has_value());
}

TEST(Sharpe, AlternatingSeriesIsZero) {
  EXPECT_EQ(*sharpe(std::vector<double>{0.3, -0.3, 0.3, -0.3}), 0.0);
}

TEST(Sharpe, TooShortOrNonFinite) {
  EXPECT_THROW(sharpe(std::vector<double>{1.0}), std::invalid_argument);
  EXPECT_THROW(sharpe(std::vector<double>{1.0, std::nan("")}), std::invalid_argument);
}

TEST(AlphaRegression, HandCase) {
  const AlphaRegression r = alpha_regression(Eigen::Vector3d(1, 2, 3), Eigen::MatrixXd(Eigen::Vector3d(0, 1, 2)));
  EXPECT_NEAR(r.alpha, 1.0, 1e-12);
  EXPECT_NEAR(r.betas(0), 1.0, 1e-12);
  EXPECT_LT(r.residuals.norm(), 1e-12);
}

TEST(AlphaRegression, SeriesEqualToAFactor) {
  std::mt19937_64 rng(81);
  const Eigen::MatrixXd F = widesdf::testing::gaussian_matrix(60, 3, rng);
  const AlphaRegression r = alpha_regression(F.col(1), F);
  EXPECT_NEAR(r.alpha, 0.0, 1e-10);
  EXPECT_NEAR(r.betas(0), 0.0, 1e-10);
  EXPECT_NEAR(r.betas(1), 1.0, 1e-10);
  EXPECT_NEAR(r.betas(2), 0.0, 1e-10);
}

TEST(AlphaRegression, ClassicalStandardError) {
  // one factor: se(alpha)^2 = s^2 (1/n + fbar^2 / Sxx)
  std::mt19937_64 rng(82);
  const int n = 40;
  const Eigen::VectorXd f = widesdf::testing::gaussian_vector(n, rng);
  const Eigen::VectorXd y = 0.3 + 0.7 * f.array() + widesdf::testing::gaussian_vector(n, rng, 0.2).array();
  const AlphaRegression r = alpha_regression(y, f);
  const double fbar = f.mean();
  const double sxx = (f.array() - fbar).square().sum();
  const double beta = ((f.array() - fbar) * (y.array() - y.mean())).sum() / sxx;
  const double alpha = y.mean() - beta * fbar;
  const double s2 = (y.array() - alpha - beta * f.array()).square().sum() / (n - 2);
  const double se = std::sqrt(s2 * (1.0 / n + fbar * fbar / sxx));
  EXPECT_NEAR(r.alpha, alpha, 1e-12);
  EXPECT_NEAR(r.betas(0), beta, 1e-12);
  EXPECT_NEAR(r.alpha_se, se, 1e-12);
  EXPECT_NEAR(r.t_stat, alpha / se, 1e-9);
  EXPECT_EQ(r.num_obs, n);
}

TEST(AlphaRegression, NeweyWestStandardError) {
  // explicit double sum over (t, s) with |t - s| <= lags
  std::mt19937_64 rng(83);
  const int n = 30, lags = 3;
  const Eigen::MatrixXd F = widesdf::testing::gaussian_matrix(n, 2, rng);
  const Eigen::VectorXd y = widesdf::testing::gaussian_vector(n, rng);
  const AlphaRegression r = alpha_regression(y, F, lags);
  const AlphaRegression classical = alpha_regression(y, F);
  EXPECT_EQ(r.alpha, classical.alpha);
  Eigen::MatrixXd X(n, 3);
  X << Eigen::VectorXd::Ones(n), F;
  Eigen::Matrix3d S = Eigen::Matrix3d::Zero();
  for (int t = 0; t < n; ++t) {
    for (int u = 0; u < n; ++u) {
      const int l = std::abs(t - u);
      if (l > lags) continue;
      const double w = 1.0 - static_cast<double>(l) / (lags + 1);
      S += w * r.residuals(t) * r.residuals(u) * X.row(t).transpose() * X.row(u);
    }
  }
  const Eigen::Matrix3d inv = (X.transpose() * X).inverse();
  const double se = std::sqrt((inv * S * inv)(0, 0));
  EXPECT_NEAR(r.alpha_se, se, 1e-12 * se);
  EXPECT_THROW(alpha_regression(y, F, -1), std::invalid_argument);
  EXPECT_THROW(alpha_regression(y, F, n), std::invalid_argument);
}

TEST(AlphaRegression, RankDeficiencyListsColumns) {
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(10, 2);
  try {
    alpha_regression(Eigen::VectorXd::LinSpaced(10, 0, 1), F);
    FAIL() << "expected RankDeficientError";
  } catch (const RankDeficientError& e) {
    EXPECT_EQ(e.columns(), (std::vector<int>{0, 1}));
  }
  std::mt19937_64 rng(83);
  Eigen::MatrixXd G = widesdf::testing::gaussian_matrix(10, 3, rng);
  G.col(2) = 2.0 * G.col(0) - G.col(1);
  try {
    alpha_regression(Eigen::VectorXd::LinSpaced(10, 0, 1), G);
    FAIL() << "expected RankDeficientError";
  } catch (const RankDeficientError& e) {
    EXPECT_EQ(e.columns(), (std::vector<int>{2}));
  }
}

TEST(AlphaRegression, Preconditions) {
  EXPECT_THROW(alpha_regression(Eigen::Vector2d(1, 2), Eigen::MatrixXd::Ones(2, 1)), std::invalid_argument);
  EXPECT_THROW(alpha_regression(Eigen::Vector3d(1, 2, 3), Eigen::MatrixXd(3, 0)), std::invalid_argument);
  EXPECT_THROW(alpha_regression(Eigen::Vector3d(1, 2, 3), Eigen::MatrixXd::Ones(4, 1)), std::invalid_argument);
}
