#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "widesdf/architecture.hpp"
#include "widesdf/kernel_matrix.hpp"

namespace widesdf {

/// Which infinite-width kernel of the network to evaluate.
///   NTK  : the tangent kernel Theta^(L+1)
///   NNGP : (sigma_w^(L))^2 Sigma^(L+1), the covariance of the untrained net
enum class KernelType { NTK, NNGP };

std::string_view to_string(KernelType which);
KernelType parse_kernel_type(std::string_view name);

/// Restriction of a layer covariance to a pair of inputs.
struct PairCovariance {
  double xx = 0.0;  // Sigma(x, x)
  double yy = 0.0;  // Sigma(x~, x~)
  double xy = 0.0;  // Sigma(x, x~)
};

/// One NNGP layer: V(w^2 a + b^2, w^2 b + b^2, w^2 c + b^2).
double nngp_step(const PairCovariance& prev, double sigma_w, double sigma_b, Activation kind);

struct NtkValues {
  double theta = 0.0;  // Theta^(L+1)(x, x~)
  double sigma = 0.0;  // Sigma^(L+1)(x, x~)
};

/// Closed-form NTK/NNGP recursion for one input pair.
///
///   Sigma^(1)      = x'x~ / n0,   Theta^(1) = Sigma^(1) + 1
///   q^(l)          = (sigma_w^(l-1))^2 Sigma^(l) + (sigma_b^(l-1))^2
///   Sigma^(l+1)    = V(q^(l))
///   SigmaHat^(l+1) = (sigma_w^(l))^2 Vdot(q^(l))
///   Theta^(l+1)    = Theta^(l) SigmaHat^(l+1) + Sigma^(l+1) + 1     (l < L)
///   Theta^(L+1)    = Theta^(L) SigmaHat^(L+1) + Sigma^(L+1)
///
/// The "+1" is the gradient feature of a hidden-layer bias; the output layer
/// has no bias, so the top step omits it.
NtkValues ntk_recursion(std::span<const double> x, std::span<const double> x2,
                        const ArchitectureSpec& arch);

/// Every intermediate of `ntk_recursion`, indexed by layer l = 1..L+1
/// (index 0 is unused and holds NaN; sigma_hat[1] is NaN as well).
struct NtkTrace {
  std::vector<double> sigma;
  std::vector<double> sigma_hat;
  std::vector<double> theta;
};
NtkTrace ntk_trace(std::span<const double> x, std::span<const double> x2,
                   const ArchitectureSpec& arch);

/// Selects Theta^(L+1) or (sigma_w^(L))^2 Sigma^(L+1).
double output_kernel(const NtkValues& values, const ArchitectureSpec& arch, KernelType which);

/// Stock-level Gram block K(X, X~); rows of X are inputs. Self-variance
/// sequences are computed once per row and reused across the pair grid.
/// `workers` > 1 splits rows across threads; the result is bit-identical to
/// the sequential order.
Eigen::MatrixXd kernel_block(const Eigen::MatrixXd& X, const Eigen::MatrixXd& X2,
                             const ArchitectureSpec& arch, KernelType which, int workers = 1);

KernelMatrix kernel_gram(const Eigen::MatrixXd& X, const Eigen::MatrixXd& X2,
                         const ArchitectureSpec& arch, KernelType which, int workers = 1);

}  // namespace widesdf
