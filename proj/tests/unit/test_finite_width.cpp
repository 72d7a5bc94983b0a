#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "widesdf/finite_width.hpp"
#include "widesdf/kernel_core.hpp"

using namespace widesdf;
using widesdf::testing::gaussian_matrix;
using widesdf::testing::max_rel_diff;

namespace {

std::span<const double> sp(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

// Central differences over the flat parameter order of grad_theta.
Eigen::VectorXd numeric_gradient(MlpParams params, const Eigen::VectorXd& x, double h) {
  std::vector<double> out;
  auto probe = [&](double& slot) {
    const double keep = slot;
    slot = keep + h;
    const double up = forward(params, sp(x)).output;
    slot = keep - h;
    const double down = forward(params, sp(x)).output;
    slot = keep;
    out.push_back((up - down) / (2 * h));
  };
  const int L = params.arch.depth;
  for (int l = 0; l <= L; ++l) {
    auto& W = params.weights[static_cast<std::size_t>(l)];
    for (Eigen::Index r = 0; r < W.rows(); ++r) {
      for (Eigen::Index c = 0; c < W.cols(); ++c) probe(W(r, c));
    }
    if (l < L) {
      auto& b = params.biases[static_cast<std::size_t>(l)];
      for (Eigen::Index r = 0; r < b.size(); ++r) probe(b(r));
    }
  }
  return Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
}

double det3(const Eigen::Matrix3d& m) {
  return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
         m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
         m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

// Cramer's rule.
Eigen::Vector3d solve3(const Eigen::Matrix3d& A, const Eigen::Vector3d& b) {
  const double d = det3(A);
  Eigen::Vector3d x;
  for (int i = 0; i < 3; ++i) {
    Eigen::Matrix3d Ai = A;
    Ai.col(i) = b;
    x(i) = det3(Ai) / d;
  }
  return x;
}

}  // namespace

TEST(Mlp, InitIsDeterministicAndShaped) {
  const ArchitectureSpec arch = ArchitectureSpec::flat(2, 4, Activation::ReLU);
  const std::vector<int> widths{5, 3};
  const MlpParams a = init_mlp(arch, widths, 9);
  const MlpParams b = init_mlp(arch, widths, 9);
  ASSERT_EQ(a.weights.size(), 3u);
  EXPECT_EQ(a.weights[0].rows(), 5);
  EXPECT_EQ(a.weights[0].cols(), 4);
  EXPECT_EQ(a.weights[2].rows(), 1);
  EXPECT_EQ(a.weights[1], b.weights[1]);
  EXPECT_EQ(a.num_parameters(), 5 * 4 + 5 + 3 * 5 + 3 + 3);
  EXPECT_NE(init_mlp(arch, widths, 10).weights[0], a.weights[0]);
}

TEST(Mlp, ZeroScaleGivesExactZeros) {
  ArchitectureSpec arch = ArchitectureSpec::uniform(1, 3, Activation::ReLU, 1.0, 0.0);
  const MlpParams p = init_mlp(arch, 6, 1);
  EXPECT_EQ(p.biases[0].norm(), 0.0);
}

TEST(Mlp, ForwardBatchMatchesForward) {
  std::mt19937_64 rng(41);
  const ArchitectureSpec arch = ArchitectureSpec::flat(3, 4, Activation::Erf);
  const MlpParams p = init_mlp(arch, 7, 2);
  const Eigen::MatrixXd X = gaussian_matrix(5, 4, rng);
  const Eigen::VectorXd out = forward_batch(p, X);
  for (Eigen::Index i = 0; i < 5; ++i) {
    const Eigen::VectorXd x = X.row(i).transpose();
    EXPECT_NEAR(out(i), forward(p, sp(x)).output, 1e-15);
  }
  const Eigen::VectorXd short_x = Eigen::VectorXd::Ones(3);
  EXPECT_THROW(forward(p, sp(short_x)), std::invalid_argument);
}

TEST(GradTheta, MatchesCentralDifferences) {
  std::mt19937_64 rng(42);
  for (auto act : {Activation::ReLU, Activation::Erf}) {
    for (int depth : {1, 2, 3}) {
      const ArchitectureSpec arch = ArchitectureSpec::flat(depth, 3, act);
      const MlpParams p = init_mlp(arch, 6, 100 + static_cast<std::uint64_t>(depth));
      const Eigen::VectorXd x = gaussian_matrix(3, 1, rng);
      const Eigen::VectorXd g = grad_theta(p, sp(x));
      ASSERT_EQ(g.size(), p.num_parameters());
      EXPECT_LT((g - numeric_gradient(p, x, 1e-6)).norm() / g.norm(), 1e-6);
    }
  }
}

TEST(GradTheta, Depth1ClosedForm) {
  // f = W1 phi(W0 x / sqrt(n0) + b0) / sqrt(n1):
  //   df/dW0_ji = W1_j phi'(z_j) x_i / sqrt(n0 n1), df/db0_j = W1_j phi'(z_j) / sqrt(n1),
  //   df/dW1_j  = phi(z_j) / sqrt(n1)
  std::mt19937_64 rng(43);
  const int n0 = 4, n1 = 9;
  const ArchitectureSpec arch = ArchitectureSpec::flat(1, n0, Activation::Erf);
  const MlpParams p = init_mlp(arch, n1, 5);
  const Eigen::VectorXd x = gaussian_matrix(n0, 1, rng);
  const Eigen::VectorXd z = p.weights[0] * x / std::sqrt(double(n0)) + p.biases[0];
  Eigen::VectorXd expect(n1 * n0 + n1 + n1);
  Eigen::Index k = 0;
  for (int j = 0; j < n1; ++j) {
    for (int i = 0; i < n0; ++i) {
      expect(k++) = p.weights[1](0, j) * activate_derivative(z(j), Activation::Erf) * x(i) /
                    std::sqrt(double(n0) * n1);
    }
  }
  for (int j = 0; j < n1; ++j) {
    expect(k++) = p.weights[1](0, j) * activate_derivative(z(j), Activation::Erf) / std::sqrt(double(n1));
  }
  for (int j = 0; j < n1; ++j) expect(k++) = activate(z(j), Activation::Erf) / std::sqrt(double(n1));
  EXPECT_LT((grad_theta(p, sp(x)) - expect).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(EmpiricalNtk, EqualsGradientInnerProduct) {
  std::mt19937_64 rng(44);
  for (int depth : {1, 3}) {
    const ArchitectureSpec arch = ArchitectureSpec::flat(depth, 5, Activation::ReLU);
    const MlpParams p = init_mlp(arch, 12, 6);
    const Eigen::VectorXd x = gaussian_matrix(5, 1, rng), y = gaussian_matrix(5, 1, rng);
    const double direct = grad_theta(p, sp(x)).dot(grad_theta(p, sp(y)));
    EXPECT_NEAR(empirical_ntk(p, sp(x), sp(y)), direct, 1e-12 * std::abs(direct));
  }
}

TEST(EmpiricalNtk, GramIsSymmetricPsd) {
  std::mt19937_64 rng(45);
  const MlpParams p = init_mlp(ArchitectureSpec::flat(2, 3, Activation::Erf), 10, 7);
  const Eigen::MatrixXd G = empirical_ntk_gram(p, gaussian_matrix(6, 3, rng));
  EXPECT_TRUE(check_psd(G).psd);
  EXPECT_TRUE(check_psd(G).symmetric);
}

TEST(EmpiricalNtk, WideNetworkApproachesRecursion) {
  std::mt19937_64 rng(46);
  const ArchitectureSpec arch = ArchitectureSpec::flat(1, 6, Activation::Erf);
  const Eigen::VectorXd x = gaussian_matrix(6, 1, rng), y = gaussian_matrix(6, 1, rng);
  double mean = 0.0;
  for (int s = 0; s < 8; ++s) mean += empirical_ntk(init_mlp(arch, 2048, 50 + s), sp(x), sp(y)) / 8;
  const double exact = ntk_recursion(sp(x), sp(y), arch).theta;
  EXPECT_NEAR(mean, exact, 0.05 * std::abs(exact));
}

TEST(NngpDistribution, LinearNetworkCovarianceIsUnbiased) {
  // With phi(u) = u the output covariance equals the recursion at any width.
  std::mt19937_64 rng(47);
  const ArchitectureSpec arch = ArchitectureSpec::flat(2, 4, Activation::Linear);
  const Eigen::MatrixXd X = gaussian_matrix(3, 4, rng);
  const std::vector<int> widths{32, 32};
  const NngpReport r = nngp_distribution_test(arch, widths, 2000, X, 0, 2);
  EXPECT_EQ(r.num_seeds, 2000);
  EXPECT_EQ(r.jarque_bera.size(), 3u);
  for (Eigen::Index i = 0; i < 3; ++i) {
    EXPECT_NEAR(r.sample_covariance(i, i), r.analytic_covariance(i, i), 0.15 * r.analytic_covariance(i, i));
  }
  EXPECT_THROW(nngp_distribution_test(arch, widths, 100, X), std::invalid_argument);
}

TEST(NngpDistribution, WorkerCountDoesNotChangeResult) {
  std::mt19937_64 rng(48);
  const ArchitectureSpec arch = ArchitectureSpec::flat(1, 3, Activation::ReLU);
  const Eigen::MatrixXd X = gaussian_matrix(4, 3, rng);
  const std::vector<int> widths{16};
  const NngpReport a = nngp_distribution_test(arch, widths, 200, X, 3, 1);
  const NngpReport b = nngp_distribution_test(arch, widths, 200, X, 3, 3);
  EXPECT_EQ(a.sample_covariance, b.sample_covariance);
  EXPECT_EQ(a.sample_mean, b.sample_mean);
}

TEST(GpPosterior, HandSolvedThreePointCase) {
  const KernelFunction k = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return std::exp(-0.5 * (a - b).squaredNorm());
  };
  Eigen::MatrixXd X(3, 1);
  X << 0.0, 1.0, 2.5;
  const Eigen::Vector3d Y(1.0, -0.5, 2.0);
  const double s2 = 0.1;
  const Eigen::VectorXd xs = Eigen::VectorXd::Constant(1, 0.7);

  Eigen::Matrix3d A;
  Eigen::Vector3d kx;
  for (int i = 0; i < 3; ++i) {
    kx(i) = k(xs, X.row(i).transpose());
    for (int j = 0; j < 3; ++j) A(i, j) = k(X.row(i).transpose(), X.row(j).transpose()) + (i == j ? s2 : 0.0);
  }
  const double mean = kx.dot(solve3(A, Y));
  const double var = 1.0 - kx.dot(solve3(A, kx));

  const GpPosterior post = gp_posterior(k, X, Y, s2, xs);
  EXPECT_NEAR(post.mean, mean, 1e-10);
  EXPECT_NEAR(post.variance, var, 1e-10);
}

TEST(GpPosterior, InterpolatesWithoutNoise) {
  std::mt19937_64 rng(49);
  const ArchitectureSpec arch = ArchitectureSpec::flat(2, 3, Activation::ReLU);
  const KernelFunction k = [&arch](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return ntk_recursion(sp(a), sp(b), arch).theta;
  };
  const Eigen::MatrixXd X = gaussian_matrix(5, 3, rng);
  const Eigen::VectorXd Y = gaussian_matrix(5, 1, rng);
  for (Eigen::Index i = 0; i < 5; ++i) {
    const GpPosterior post = gp_posterior(k, X, Y, 0.0, X.row(i).transpose());
    EXPECT_NEAR(post.mean, Y(i), 1e-8);
    EXPECT_NEAR(post.variance, 0.0, 1e-8);
  }
}

TEST(GpPosterior, VarianceShrinksWithMoreData) {
  std::mt19937_64 rng(50);
  const KernelFunction k = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return std::exp(-(a - b).squaredNorm());
  };
  const Eigen::MatrixXd X = gaussian_matrix(8, 2, rng);
  const Eigen::VectorXd Y = gaussian_matrix(8, 1, rng);
  const Eigen::VectorXd xs = gaussian_matrix(2, 1, rng);
  double prev = gp_posterior(k, X.topRows(0), Y.head(0), 0.01, xs).variance;
  EXPECT_DOUBLE_EQ(prev, 1.0);
  for (Eigen::Index n = 1; n <= 8; ++n) {
    const double v = gp_posterior(k, X.topRows(n), Y.head(n), 0.01, xs).variance;
    EXPECT_LE(v, prev + 1e-12);
    prev = v;
  }
}

TEST(GpPosterior, DuplicateInputsWithoutNoiseAreSingular) {
  const KernelFunction k = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return a.dot(b) + 1.0; };
  Eigen::MatrixXd X(2, 1);
  X << 1.0, 1.0;
  EXPECT_THROW(gp_posterior(k, X, Eigen::Vector2d(1, 2), 0.0, Eigen::VectorXd::Ones(1)), std::runtime_error);
  EXPECT_THROW(gp_posterior(k, X, Eigen::Vector2d(1, 2), -1.0, Eigen::VectorXd::Ones(1)),
               std::invalid_argument);
}
