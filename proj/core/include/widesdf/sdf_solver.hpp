#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "widesdf/architecture.hpp"
#include "widesdf/kernel_matrix.hpp"
#include "widesdf/panel.hpp"
#include "widesdf/ptk.hpp"

namespace widesdf {

struct RidgeMode {
  double z = 0.0;
};

struct GradientFlowMode {
  double eta = 1.0;
  double s = 0.0;
};

using WeightMode = std::variant<RidgeMode, GradientFlowMode>;

/// Per-period SDF weights xi. The canonical convention is
///   sdf_return(row, xi) = row' xi,   xi_ridge = (1/T) (z I + K/T)^{-1} 1,
/// i.e. the 1/T prefactor lives inside xi.
struct SdfWeights {
  Eigen::VectorXd xi;
  WeightMode mode;
  std::string kernel_fingerprint;
};

/// Penalty in the per-period convention that reproduces the pooled form
/// row' (K + z_pooled I)^{-1} 1: z = z_pooled / T.
double pooled_to_per_period_penalty(double z_pooled, Eigen::Index T);

/// FNV-1a of the kernel bytes, used to tag weights.
std::string kernel_fingerprint(const Eigen::MatrixXd& K);

/// xi = (1/T) (z I + K/T)^{-1} 1 via Cholesky. When the factorization fails
/// for z > 0, a diagonal jitter of 1e-10 trace/T is added and escalated x10
/// up to three times. z = 0 requires min eigenvalue > 1e-12 max eigenvalue;
/// otherwise std::runtime_error advising a positive ridge.
SdfWeights ridge_weights(const KernelMatrix& K, double z);

/// xi = (1/T) U f_GD(D) U' 1 with K/T = U D U' and
/// f_GD(x) = (1 - exp(-eta s x)) / x, f_GD(0) = eta s.
/// As s -> infinity this tends to ridge_weights(K, 0).
SdfWeights gd_weights(const KernelMatrix& K, double eta, double s);

/// f_mode evaluated at each eigenvalue (of K/T).
std::vector<double> shrinkage_profile(const std::vector<double>& eigenvalues, const WeightMode& mode);

/// x f_mode(x): the fraction of each eigen-direction kept.
std::vector<double> shrink_factors(const std::vector<double>& eigenvalues, const WeightMode& mode);

/// row' xi.
double sdf_return(const Eigen::VectorXd& cross_row, const SdfWeights& weights);

/// One eigendecomposition of K/T reused across a penalty grid.
class SpectralSolver {
 public:
  explicit SpectralSolver(const KernelMatrix& K);

  SdfWeights ridge(double z) const;
  SdfWeights gradient_flow(double eta, double s) const;
  SdfWeights solve(const WeightMode& mode) const;

  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  Eigen::Index size() const { return eigenvalues_.size(); }

 private:
  SdfWeights apply(const WeightMode& mode) const;

  Eigen::MatrixXd eigenvectors_;
  Eigen::VectorXd eigenvalues_;
  Eigen::VectorXd projected_ones_;  // U' 1
  std::string fingerprint_;
};

/// Ridge-penalized efficient factor portfolio theta in two algebraic routes
/// for F (P x T):
///   primal: T^-1 (z I + T^-1 F F')^{-1} F 1
///   dual  : T^-1 F (z I + T^-1 F' F)^{-1} 1
Eigen::VectorXd msrr_primal(const Eigen::MatrixXd& F, double z);
Eigen::VectorXd msrr_dual(const Eigen::MatrixXd& F, double z);

/// Factor returns of P random features plus the portfolio fitted on them.
///
/// Features are the hidden units of an untrained one-hidden-layer net:
/// w ~ N(0, sigma_w0^2 / n0 I), b ~ N(0, sigma_b0^2), scaled by sigma_w1 so
/// that (1/P) sum_k phi_k(x) phi_k(x~) tends to the depth-1 NNGP kernel.
/// Factor F_{t+1} = P^{-1/2} phi(X_t W)' R_{t+1} / N_t^alpha.
class RandomFeatureSdf {
 public:
  RandomFeatureSdf(const PanelDataset& panel, std::size_t num_features, std::uint64_t seed,
                   double z, const ArchitectureSpec& shallow, const Normalization& norm);

  /// P x T in-sample factor returns.
  const Eigen::MatrixXd& factors() const { return factors_; }
  const Eigen::VectorXd& theta() const { return theta_; }
  /// theta' F_t for each in-sample t.
  Eigen::VectorXd in_sample_returns() const;

  /// Factor vector of an arbitrary state (R, X).
  Eigen::VectorXd factor_returns(const Eigen::VectorXd& r, const Eigen::MatrixXd& X) const;
  /// theta' F(R, X).
  double oos_return(const Eigen::VectorXd& r, const Eigen::MatrixXd& X) const;

 private:
  Eigen::MatrixXd features(const Eigen::MatrixXd& X) const;  // N x P

  ArchitectureSpec arch_;
  Normalization norm_;
  Eigen::MatrixXd W_;  // n0 x P
  Eigen::RowVectorXd b_;
  Eigen::MatrixXd factors_;
  Eigen::VectorXd theta_;
};

}  // namespace widesdf
