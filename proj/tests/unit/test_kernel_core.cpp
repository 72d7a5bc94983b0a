#include <cmath>
#include <cstring>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "widesdf/architecture.hpp"
#include "widesdf/kernel_core.hpp"

using namespace widesdf;
using widesdf::testing::gaussian_matrix;

namespace {

std::span<const double> row_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

// Depth-1 ReLU NTK written out in full with arc-cosine formulas.
double relu_depth1_ntk(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double w0, double b0,
                       double w1) {
  const double n0 = static_cast<double>(x.size());
  const double qxx = w0 * w0 * x.squaredNorm() / n0 + b0 * b0;
  const double qyy = w0 * w0 * y.squaredNorm() / n0 + b0 * b0;
  const double qxy = w0 * w0 * x.dot(y) / n0 + b0 * b0;
  const double theta = std::acos(std::clamp(qxy / std::sqrt(qxx * qyy), -1.0, 1.0));
  const double pi = std::numbers::pi;
  const double k1 = std::sqrt(qxx * qyy) / (2 * pi) * (std::sin(theta) + (pi - theta) * std::cos(theta));
  const double k0 = (pi - theta) / (2 * pi);
  return (x.dot(y) / n0 + 1.0) * w1 * w1 * k0 + k1;
}

}  // namespace

TEST(NtkRecursion, Depth1ReluMatchesClosedForm) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd x = gaussian_matrix(6, 1, rng), y = gaussian_matrix(6, 1, rng);
    ArchitectureSpec arch = ArchitectureSpec::uniform(1, 6, Activation::ReLU, 1.3, 0.2);
    arch.sigma_w = {1.3, 0.7};
    const double expect = relu_depth1_ntk(x, y, 1.3, 0.2, 0.7);
    EXPECT_NEAR(ntk_recursion(row_span(x), row_span(y), arch).theta, expect, 1e-12 * std::abs(expect));
  }
}

TEST(NtkRecursion, LinearActivationClosedForm) {
  // phi(u) = u makes every layer affine: Sigma^(l+1) = w^2 Sigma^(l) + b^2, SigmaHat = w^2.
  std::mt19937_64 rng(4);
  const Eigen::VectorXd x = gaussian_matrix(5, 1, rng), y = gaussian_matrix(5, 1, rng);
  ArchitectureSpec arch = ArchitectureSpec::uniform(2, 5, Activation::Linear, 1.0, 0.0);
  arch.sigma_w = {1.1, 0.9, 1.2};
  arch.sigma_b = {0.3, 0.4};
  const double s1 = x.dot(y) / 5.0;
  const double s2 = 1.21 * s1 + 0.09;
  const double s3 = 0.81 * s2 + 0.16;
  const double t1 = s1 + 1.0;
  const double t2 = t1 * 0.81 + s2 + 1.0;
  const double t3 = t2 * 1.44 + s3;
  const NtkValues v = ntk_recursion(row_span(x), row_span(y), arch);
  EXPECT_NEAR(v.sigma, s3, 1e-14);
  EXPECT_NEAR(v.theta, t3, 1e-14);
  EXPECT_NEAR(output_kernel(v, arch, KernelType::NNGP), 1.44 * s3, 1e-14);
  EXPECT_NEAR(output_kernel(v, arch, KernelType::NTK), t3, 1e-14);
}

TEST(NtkRecursion, TraceSatisfiesLayerIdentity) {
  std::mt19937_64 rng(5);
  for (auto act : {Activation::ReLU, Activation::Erf}) {
    for (int depth : {1, 2, 5}) {
      const ArchitectureSpec arch = ArchitectureSpec::flat(depth, 7, act);
      const Eigen::VectorXd x = gaussian_matrix(7, 1, rng), y = gaussian_matrix(7, 1, rng);
      const NtkTrace tr = ntk_trace(row_span(x), row_span(y), arch);
      ASSERT_EQ(tr.theta.size(), static_cast<std::size_t>(depth + 2));
      EXPECT_NEAR(tr.theta[1], tr.sigma[1] + 1.0, 1e-14);
      for (int l = 1; l < depth; ++l) {
        EXPECT_NEAR(tr.theta[l + 1] - tr.sigma[l + 1] - 1.0, tr.theta[l] * tr.sigma_hat[l + 1], 1e-12);
      }
      // the output layer has no bias
      EXPECT_NEAR(tr.theta[depth + 1] - tr.sigma[depth + 1], tr.theta[depth] * tr.sigma_hat[depth + 1],
                  1e-12);
      EXPECT_NEAR(ntk_recursion(row_span(x), row_span(y), arch).theta, tr.theta[depth + 1], 0.0);
    }
  }
}

TEST(NtkRecursion, SymmetricInInputs) {
  std::mt19937_64 rng(6);
  const ArchitectureSpec arch = ArchitectureSpec::flat(3, 4, Activation::Erf);
  const Eigen::VectorXd x = gaussian_matrix(4, 1, rng), y = gaussian_matrix(4, 1, rng);
  const auto a = ntk_recursion(row_span(x), row_span(y), arch);
  const auto b = ntk_recursion(row_span(y), row_span(x), arch);
  EXPECT_EQ(a.theta, b.theta);
  EXPECT_EQ(a.sigma, b.sigma);
}

TEST(NtkRecursion, RejectsMismatchedInput) {
  const ArchitectureSpec arch = ArchitectureSpec::flat(1, 3, Activation::ReLU);
  const std::vector<double> x{1, 2, 3}, y{1, 2};
  EXPECT_THROW(ntk_recursion(x, y, arch), std::invalid_argument);
}

TEST(KernelBlock, EqualsPairwiseRecursion) {
  std::mt19937_64 rng(7);
  const Eigen::MatrixXd X = gaussian_matrix(9, 4, rng), Y = gaussian_matrix(6, 4, rng);
  for (auto which : {KernelType::NTK, KernelType::NNGP}) {
    const ArchitectureSpec arch = ArchitectureSpec::flat(2, 4, Activation::ReLU);
    const Eigen::MatrixXd K = kernel_block(X, Y, arch, which);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      for (Eigen::Index j = 0; j < Y.rows(); ++j) {
        const Eigen::VectorXd x = X.row(i).transpose(), y = Y.row(j).transpose();
        const double e = output_kernel(ntk_recursion(row_span(x), row_span(y), arch), arch, which);
        EXPECT_NEAR(K(i, j), e, 1e-14 * std::max(1.0, std::abs(e)));
      }
    }
  }
}

TEST(KernelBlock, WorkerCountDoesNotChangeBits) {
  std::mt19937_64 rng(8);
  const Eigen::MatrixXd X = gaussian_matrix(23, 5, rng);
  const ArchitectureSpec arch = ArchitectureSpec::flat(3, 5, Activation::Erf);
  const Eigen::MatrixXd one = kernel_block(X, X, arch, KernelType::NTK, 1);
  for (int w : {2, 3, 4}) {
    const Eigen::MatrixXd many = kernel_block(X, X, arch, KernelType::NTK, w);
    EXPECT_EQ(std::memcmp(one.data(), many.data(), sizeof(double) * one.size()), 0);
  }
}

TEST(KernelGram, SymmetricPsdWithLabels) {
  std::mt19937_64 rng(9);
  const Eigen::MatrixXd X = gaussian_matrix(15, 3, rng);
  for (auto act : {Activation::ReLU, Activation::Erf}) {
    for (auto which : {KernelType::NTK, KernelType::NNGP}) {
      const KernelMatrix K = kernel_gram(X, X, ArchitectureSpec::flat(4, 3, act), which);
      EXPECT_EQ(K.rows(), 15);
      EXPECT_TRUE(K.square_labeled());
      const PsdCheck c = check_psd(K.values);
      EXPECT_TRUE(c.symmetric);
      EXPECT_TRUE(c.psd) << c.min_eigenvalue;
    }
  }
}

TEST(KernelType, ParseRoundTrip) {
  EXPECT_EQ(parse_kernel_type("ntk"), KernelType::NTK);
  EXPECT_EQ(parse_kernel_type("nngp"), KernelType::NNGP);
  EXPECT_THROW(parse_kernel_type("rbf"), std::invalid_argument);
}

TEST(Architecture, FlatDefaultsAndValidation) {
  const ArchitectureSpec a = ArchitectureSpec::flat(3, 10, Activation::ReLU);
  EXPECT_EQ(a.sigma_w.size(), 4u);
  EXPECT_EQ(a.sigma_b.size(), 3u);
  EXPECT_EQ(a.sigma_w[0], 1.0);
  EXPECT_EQ(a.sigma_b[2], 0.05);
  ArchitectureSpec bad = a;
  bad.sigma_b.pop_back();
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  ArchitectureSpec zero = a;
  zero.depth = 0;
  EXPECT_THROW(zero.validate(), std::invalid_argument);
  EXPECT_NE(a.fingerprint(), ArchitectureSpec::flat(2, 10, Activation::ReLU).fingerprint());
}
