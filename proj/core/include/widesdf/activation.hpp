#pragma once

#include <string>
#include <string_view>

namespace widesdf {

/// Pointwise nonlinearity of a hidden layer.
///
/// `Linear` (phi(u) = u) is not used by the estimators; it exists so the
/// finite-width checks have a case with an exactly known covariance.
enum class Activation { ReLU, Erf, Linear };

/// Gaussian expectations of an activation pair for (u, v) centered Gaussian
/// with Var(u) = a, Var(v) = b, Cov(u, v) = c:
///   v    = E[phi(u) phi(v)]
///   vdot = E[phi'(u) phi'(v)]
struct DualValues {
  double v = 0.0;
  double vdot = 0.0;
};

/// Closed-form dual activation. ReLU uses the arc-cosine family, Erf the
/// arcsine family. The correlation is clamped to |rho| <= 1 - 1e-12 before
/// any inverse-trig call.
///
/// Throws std::domain_error on negative variances or NaN inputs.
DualValues dual_activation(double a, double b, double c, Activation kind);

/// phi(u) and phi'(u). The ReLU derivative at 0 is taken as 0.
double activate(double u, Activation kind);
double activate_derivative(double u, Activation kind);

std::string_view to_string(Activation kind);
Activation parse_activation(std::string_view name);

}  // namespace widesdf
