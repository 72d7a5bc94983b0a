#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "widesdf/activation.hpp"

using namespace widesdf;

namespace {

constexpr double kPi = std::numbers::pi;

// Monte Carlo expectations of phi(u)phi(v) and phi'(u)phi'(v).
DualValues monte_carlo(double a, double b, double c, Activation kind, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const double sa = std::sqrt(a);
  const double slope = c / a;
  const double resid = std::sqrt(std::max(b - c * c / a, 0.0));
  double v = 0.0, vd = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z1 = normal(rng), z2 = normal(rng);
    const double u = sa * z1;
    const double w = slope * u + resid * z2;
    v += activate(u, kind) * activate(w, kind);
    vd += activate_derivative(u, kind) * activate_derivative(w, kind);
  }
  return {v / n, vd / n};
}

}  // namespace

TEST(DualActivation, ReluAlignedInputsGiveHalfVariance) {
  // theta = 0: V = sqrt(ab) / 2, Vdot = 1/2. The correlation clamp at 1 - 1e-12
  // leaves theta ~ 1.4e-6, so Vdot sits ~2.3e-7 below 1/2.
  const auto d = dual_activation(2.0, 2.0, 2.0, Activation::ReLU);
  EXPECT_NEAR(d.v, 1.0, 1e-12);
  EXPECT_NEAR(d.vdot, 0.5 - std::acos(1.0 - 1e-12) / (2 * kPi), 1e-12);
}

TEST(DualActivation, ReluOrthogonalInputs) {
  // theta = pi/2: V = sqrt(ab) / (2 pi), Vdot = 1/4
  const auto d = dual_activation(1.0, 4.0, 0.0, Activation::ReLU);
  EXPECT_NEAR(d.v, 2.0 / (2.0 * kPi), 1e-14);
  EXPECT_NEAR(d.vdot, 0.25, 1e-14);
}

TEST(DualActivation, ReluOppositeInputsVanish) {
  const auto d = dual_activation(1.0, 1.0, -1.0, Activation::ReLU);
  EXPECT_NEAR(d.v, 0.0, 1e-6);
  EXPECT_NEAR(d.vdot, 0.0, 1e-6);
}

TEST(DualActivation, ReluZeroVarianceIsZero) {
  const auto d = dual_activation(0.0, 3.0, 0.0, Activation::ReLU);
  EXPECT_EQ(d.v, 0.0);
  EXPECT_EQ(d.vdot, 0.0);
}

TEST(DualActivation, ErfClosedForm) {
  const double a = 0.7, b = 1.3, c = 0.4;
  const auto d = dual_activation(a, b, c, Activation::Erf);
  const double den = (1 + 2 * a) * (1 + 2 * b);
  EXPECT_NEAR(d.v, 2.0 / kPi * std::asin(2 * c / std::sqrt(den)), 1e-15);
  EXPECT_NEAR(d.vdot, 4.0 / kPi / std::sqrt(den - 4 * c * c), 1e-15);
}

TEST(DualActivation, LinearHookIsCovariance) {
  const auto d = dual_activation(1.5, 2.5, -0.3, Activation::Linear);
  EXPECT_EQ(d.v, -0.3);
  EXPECT_EQ(d.vdot, 1.0);
}

TEST(DualActivation, SymmetricInArguments) {
  for (auto kind : {Activation::ReLU, Activation::Erf}) {
    const auto d1 = dual_activation(0.3, 1.9, 0.5, kind);
    const auto d2 = dual_activation(1.9, 0.3, 0.5, kind);
    EXPECT_NEAR(d1.v, d2.v, 1e-15);
    EXPECT_NEAR(d1.vdot, d2.vdot, 1e-15);
  }
}

TEST(DualActivation, DerivativeInCovarianceIsVdot) {
  // d/dc E[phi(u)phi(v)] = E[phi'(u)phi'(v)] for jointly Gaussian (u, v).
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> var(0.2, 2.0), corr(-0.9, 0.9);
  for (auto kind : {Activation::ReLU, Activation::Erf}) {
    for (int i = 0; i < 50; ++i) {
      const double a = var(rng), b = var(rng);
      const double c = corr(rng) * std::sqrt(a * b);
      const double h = 1e-6;
      const double fd = (dual_activation(a, b, c + h, kind).v - dual_activation(a, b, c - h, kind).v) /
                        (2 * h);
      EXPECT_NEAR(fd, dual_activation(a, b, c, kind).vdot, 1e-7);
    }
  }
}

TEST(DualActivation, MatchesMonteCarloOnAFewTriples) {
  const double triples[][3] = {{1.0, 1.0, 0.5}, {0.3, 2.0, -0.4}, {1.5, 0.8, 0.9}};
  for (auto kind : {Activation::ReLU, Activation::Erf}) {
    for (const auto& t : triples) {
      const auto exact = dual_activation(t[0], t[1], t[2], kind);
      const auto mc = monte_carlo(t[0], t[1], t[2], kind, 400000, 5);
      EXPECT_NEAR(exact.v, mc.v, 1e-2);
      EXPECT_NEAR(exact.vdot, mc.vdot, 1e-2);
    }
  }
}

TEST(DualActivation, ClampsCorrelationAboveOne) {
  const auto d = dual_activation(1.0, 1.0, 1.0 + 1e-9, Activation::ReLU);
  EXPECT_TRUE(std::isfinite(d.v));
  EXPECT_TRUE(std::isfinite(d.vdot));
  const auto e = dual_activation(1.0, 1.0, 1.0 + 1e-9, Activation::Erf);
  EXPECT_TRUE(std::isfinite(e.vdot));
}

TEST(DualActivation, RejectsNegativeVarianceAndNaN) {
  EXPECT_THROW(dual_activation(-1.0, 1.0, 0.0, Activation::ReLU), std::domain_error);
  EXPECT_THROW(dual_activation(1.0, std::nan(""), 0.0, Activation::Erf), std::domain_error);
}

TEST(Activate, PointwiseValues) {
  EXPECT_EQ(activate(-2.0, Activation::ReLU), 0.0);
  EXPECT_EQ(activate(3.0, Activation::ReLU), 3.0);
  EXPECT_EQ(activate_derivative(0.0, Activation::ReLU), 0.0);
  EXPECT_EQ(activate_derivative(0.1, Activation::ReLU), 1.0);
  EXPECT_NEAR(activate(0.5, Activation::Erf), std::erf(0.5), 1e-15);
  EXPECT_NEAR(activate_derivative(0.5, Activation::Erf), 2.0 / std::sqrt(kPi) * std::exp(-0.25), 1e-15);
}

TEST(Activate, ParseRoundTrip) {
  for (auto kind : {Activation::ReLU, Activation::Erf, Activation::Linear}) {
    EXPECT_EQ(parse_activation(to_string(kind)), kind);
  }
  EXPECT_THROW(parse_activation("tanh"), std::invalid_argument);
}
