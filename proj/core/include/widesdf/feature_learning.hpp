#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "widesdf/panel.hpp"
#include "widesdf/sdf_solver.hpp"

namespace widesdf {

/// Symmetric PSD d x d metric of a Mahalanobis distance.
class MetricMatrix {
 public:
  /// Throws std::invalid_argument unless M is symmetric to 1e-12 (relative),
  /// has eigenvalues >= -1e-10 max eigenvalue and positive trace.
  explicit MetricMatrix(Eigen::MatrixXd M);

  static MetricMatrix identity(int d);

  const Eigen::MatrixXd& matrix() const { return M_; }
  Eigen::Index dim() const { return M_.rows(); }

 private:
  Eigen::MatrixXd M_;
};

/// Kernel profile phi in K_M(x, x~) = phi(||x - x~||_M^2), with derivative.
struct RadialProfile {
  std::function<double(double)> phi;
  std::function<double(double)> phi_prime;
  std::string name;

  /// exp(-u / (2 ell^2)).
  static RadialProfile gaussian(double ell = 1.0);
  /// exp(-sqrt(u) / ell); the derivative clamps sqrt(u) at 1e-12.
  static RadialProfile laplace(double ell = 1.0);
  /// phi(u) = u. Not a valid kernel; useful for checking gradient algebra.
  static RadialProfile identity();

  static RadialProfile parse(std::string_view name, double ell);
};

/// q_ij = (x_i - x~_j)' M (x_i - x~_j) through the expanded quadratic form
/// x'Mx + x~'Mx~ - 2 x'Mx~. Values below 1e-13 (x'Mx + x~'Mx~), the rounding
/// level of that form, are set to exactly 0.
Eigen::MatrixXd mahalanobis_sq_dist(const Eigen::MatrixXd& X, const Eigen::MatrixXd& X2,
                                    const MetricMatrix& M);

struct MahalanobisGram {
  Eigen::MatrixXd K;   // phi(q)
  Eigen::MatrixXd K1;  // phi'(q)
};
MahalanobisGram mahalanobis_kernel_gram(const Eigen::MatrixXd& X, const Eigen::MatrixXd& X2,
                                        const MetricMatrix& M, const RadialProfile& profile);

/// Gradient of the fitted weight function
///   w(x) = sum_t xi_t sum_j R_{j,t} phi(||x - X_{j,t}||_M^2),
///   grad w(x) = sum_t xi_t sum_j R_{j,t} 2 M (x - X_{j,t}) phi'(q).
/// Evaluated point by point.
Eigen::VectorXd grad_w(const Eigen::VectorXd& x, const PanelDataset& panel,
                       const SdfWeights& xi, const MetricMatrix& M, const RadialProfile& profile);

/// Average gradient outer product
///   G = (1/T) sum_tau (1/N_tau) sum_i grad w(X_{i,tau}) grad w(X_{i,tau})'
/// through period blocks of the derivative Gram K1: with Gamma_{j,t} =
/// 2 R_{j,t} xi_t and K^Gamma = K1 diag(Gamma), the gradients of a block of
/// rows are (diag(K^Gamma 1) X_tau - K^Gamma X_t) M summed over t.
Eigen::MatrixXd agop(const PanelDataset& panel, const SdfWeights& xi, const MetricMatrix& M,
                     const RadialProfile& profile);

/// Same quantity by calling grad_w at every panel point.
Eigen::MatrixXd agop_pointwise(const PanelDataset& panel, const SdfWeights& xi,
                               const MetricMatrix& M, const RadialProfile& profile);

/// How the feature matrix G becomes the next metric.
enum class MetricUpdate {
  Trace,      // M = d G / tr(G)
  SqrtTrace,  // M = d G^{1/2} / tr(G^{1/2})
};
MetricUpdate parse_metric_update(std::string_view name);

/// In-sample portfolio kernel under K_M (alpha = 0).
KernelMatrix mahalanobis_portfolio_kernel(const PanelDataset& panel, const MetricMatrix& M,
                                          const RadialProfile& profile);

/// (1/T) ||K xi - 1||^2 + z xi' K xi: the objective minimized exactly by
/// ridge_weights(K, z).
double msrr_objective(const KernelMatrix& K, const Eigen::VectorXd& xi, double z);

struct FeatureIteration {
  int iteration = 0;
  double objective_before_solve = 0.0;  // previous xi under the current metric
  double objective_after_solve = 0.0;
  double agop_trace = 0.0;
  std::vector<double> metric_eigenvalues;  // of the updated metric, descending
};

struct FeatureFit {
  MetricMatrix metric;
  SdfWeights xi;
  std::vector<FeatureIteration> iterations;
  bool degenerate = false;  // stopped because G vanished
  std::string message;
};

/// Alternates (a) portfolio kernel under M, (b) xi = ridge_weights(K, z),
/// (c) G = agop(...), (d) M = update(G). Starts from `initial` (identity
/// when empty).
FeatureFit alternate_fit(const PanelDataset& panel, double z, const RadialProfile& profile,
                         int iters, MetricUpdate rule,
                         const std::optional<MetricMatrix>& initial = std::nullopt);

/// Largest principal angle (radians) between the span of the top-k
/// eigenvectors of M and the span of the given coordinate axes.
double principal_angle_to_axes(const Eigen::MatrixXd& M, const std::vector<int>& axes);

}  // namespace widesdf
