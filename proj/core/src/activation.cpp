#include "widesdf/activation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace widesdf {

namespace {

constexpr double kCorrelationClamp = 1.0 - 1e-12;

void check_inputs(double a, double b, double c) {
  if (std::isnan(a) || std::isnan(b) || std::isnan(c)) {
    throw std::domain_error("dual_activation: NaN input");
  }
  if (a < 0.0 || b < 0.0) {
    throw std::domain_error("dual_activation: negative variance");
  }
}

double clamp_covariance(double a, double b, double c) {
  const double bound = std::sqrt(a * b) * kCorrelationClamp;
  return std::clamp(c, -bound, bound);
}

DualValues relu_dual(double a, double b, double c) {
  const double s = std::sqrt(a * b);
  if (s == 0.0) {
    // One side is identically zero, where relu and its subgradient vanish.
    return {};
  }
  const double rho = clamp_covariance(a, b, c) / s;
  const double theta = std::acos(rho);
  const double pi = std::numbers::pi;
  return {s / (2.0 * pi) * (std::sin(theta) + (pi - theta) * rho),
          (pi - theta) / (2.0 * pi)};
}

DualValues erf_dual(double a, double b, double c) {
  const double pi = std::numbers::pi;
  const double cc = clamp_covariance(a, b, c);
  const double denom = (1.0 + 2.0 * a) * (1.0 + 2.0 * b);
  const double arg = std::clamp(2.0 * cc / std::sqrt(denom), -1.0, 1.0);
  return {2.0 / pi * std::asin(arg),
          4.0 / pi / std::sqrt(denom - 4.0 * cc * cc)};
}

}  // namespace

DualValues dual_activation(double a, double b, double c, Activation kind) {
  check_inputs(a, b, c);
  switch (kind) {
    case Activation::ReLU:
      return relu_dual(a, b, c);
    case Activation::Erf:
      return erf_dual(a, b, c);
    case Activation::Linear:
      return {clamp_covariance(a, b, c), 1.0};
  }
  throw std::logic_error("dual_activation: unknown activation");
}

double activate(double u, Activation kind) {
  switch (kind) {
    case Activation::ReLU:
      return u > 0.0 ? u : 0.0;
    case Activation::Erf:
      return std::erf(u);
    case Activation::Linear:
      return u;
  }
  return 0.0;
}

double activate_derivative(double u, Activation kind) {
  switch (kind) {
    case Activation::ReLU:
      return u > 0.0 ? 1.0 : 0.0;
    case Activation::Erf:
      return 2.0 / std::sqrt(std::numbers::pi) * std::exp(-u * u);
    case Activation::Linear:
      return 1.0;
  }
  return 0.0;
}

std::string_view to_string(Activation kind) {
  switch (kind) {
    case Activation::ReLU:
      return "relu";
    case Activation::Erf:
      return "erf";
    case Activation::Linear:
      return "linear";
  }
  return "unknown";
}

Activation parse_activation(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (lower == "relu") return Activation::ReLU;
  if (lower == "erf") return Activation::Erf;
  if (lower == "linear") return Activation::Linear;
  throw std::invalid_argument("unknown activation: " + std::string(name));
}

}  // namespace widesdf
