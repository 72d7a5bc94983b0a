#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "widesdf/architecture.hpp"

namespace widesdf {

/// Parameters of a finite-width MLP in the standard parametrization
///   z^(0) = W^(0) x / sqrt(n_0) + b^(0)
///   z^(l) = W^(l) phi(z^(l-1)) / sqrt(n_l) + b^(l),   l = 1..L-1
///   f     = W^(L) phi(z^(L-1)) / sqrt(n_L)
/// W^(l) is n_{l+1} x n_l (n_{L+1} = 1); there is no output bias.
struct MlpParams {
  std::vector<Eigen::MatrixXd> weights;  // L + 1 matrices
  std::vector<Eigen::VectorXd> biases;   // L vectors
  std::vector<int> widths;               // n_0 .. n_L
  ArchitectureSpec arch;
  std::uint64_t seed = 0;

  /// Total parameter count sum_l (n_l + 1) n_{l+1} + n_L.
  Eigen::Index num_parameters() const;
};

/// Draws W^(l)_ij ~ N(0, sigma_w^(l)^2), b^(l)_i ~ N(0, sigma_b^(l)^2).
/// `hidden_widths` lists n_1..n_L. Deterministic in `seed`.
MlpParams init_mlp(const ArchitectureSpec& arch, std::span<const int> hidden_widths,
                   std::uint64_t seed);
MlpParams init_mlp(const ArchitectureSpec& arch, int width, std::uint64_t seed);

struct ForwardPass {
  double output = 0.0;
  std::vector<Eigen::VectorXd> preactivations;  // z^(0) .. z^(L-1)
};

ForwardPass forward(const MlpParams& params, std::span<const double> x);

/// Outputs for every row of X.
Eigen::VectorXd forward_batch(const MlpParams& params, const Eigen::MatrixXd& X);

/// Flat gradient of f with respect to (W^(0), b^(0), ..., W^(L-1), b^(L-1), W^(L)),
/// weight matrices flattened row-major. The ReLU derivative at 0 is 0.
Eigen::VectorXd grad_theta(const MlpParams& params, std::span<const double> x);

/// grad f(x)' grad f(x~), evaluated layer by layer without materializing
/// the flat gradients: each weight block contributes
/// (delta . delta~)(y . y~) / n_l and each bias block delta . delta~.
double empirical_ntk(const MlpParams& params, std::span<const double> x,
                     std::span<const double> x2);

/// Empirical NTK Gram matrix over the rows of X.
Eigen::MatrixXd empirical_ntk_gram(const MlpParams& params, const Eigen::MatrixXd& X);

/// Output-distribution report across independently initialized networks.
struct NngpReport {
  Eigen::MatrixXd sample_covariance;    // n-1 normalized, centered at the sample mean
  Eigen::MatrixXd analytic_covariance;  // (sigma_w^(L))^2 Sigma^(L+1)
  Eigen::VectorXd sample_mean;
  Eigen::VectorXd sample_std;
  double max_relative_deviation = 0.0;  // max_ij |S_ij - K_ij| / |K_ij|
  bool mean_within_clt = false;         // |mean_i| <= 4 std_i / sqrt(n_seeds) for all i
  std::vector<double> jarque_bera;      // per input point
  int num_seeds = 0;
};

/// Samples f(x_i; theta_seed) for seeds base_seed .. base_seed + n_seeds - 1
/// and compares the sample covariance with the analytic NNGP kernel.
/// Requires n_seeds >= 200. Seeds are independent, so `workers` threads may
/// split them; the reduction runs in seed order.
NngpReport nngp_distribution_test(const ArchitectureSpec& arch, std::span<const int> hidden_widths,
                                  int n_seeds, const Eigen::MatrixXd& x_batch,
                                  std::uint64_t base_seed = 0, int workers = 1);

struct GpPosterior {
  double mean = 0.0;
  double variance = 0.0;
};

using KernelFunction = std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

/// Zero-mean GP conditioning:
///   mean = K(x*, X) (s^2 I + K(X, X))^{-1} Y
///   var  = K(x*, x*) - K(x*, X) (s^2 I + K(X, X))^{-1} K(X, x*)
/// Throws std::runtime_error when s^2 I + K(X, X) is singular.
GpPosterior gp_posterior(const KernelFunction& kernel, const Eigen::MatrixXd& X_train,
                         const Eigen::VectorXd& Y_train, double noise_var,
                         const Eigen::VectorXd& x_star);

}  // namespace widesdf
