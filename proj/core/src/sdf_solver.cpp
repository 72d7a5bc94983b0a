#include "widesdf/sdf_solver.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace widesdf {

namespace {

void check_square(const KernelMatrix& K) {
  if (K.rows() != K.cols() || K.rows() == 0) {
    throw std::invalid_argument("sdf solver: kernel must be a nonempty square matrix");
  }
  if (!K.values.allFinite()) throw std::invalid_argument("sdf solver: kernel has non-finite entries");
}

double f_gd(double x, double eta, double s) {
  const double u = eta * s;
  if (x == 0.0) return u;
  return -std::expm1(-u * x) / x;
}

double f_ridge(double x, double z) { return 1.0 / (x + z); }

double evaluate(double x, const WeightMode& mode) {
  if (const auto* r = std::get_if<RidgeMode>(&mode)) return f_ridge(x, r->z);
  const auto& g = std::get<GradientFlowMode>(mode);
  return f_gd(x, g.eta, g.s);
}

void check_mode(const WeightMode& mode) {
  if (const auto* r = std::get_if<RidgeMode>(&mode)) {
    if (!(r->z >= 0.0)) throw std::invalid_argument("ridge penalty must be nonnegative");
    return;
  }
  const auto& g = std::get<GradientFlowMode>(mode);
  if (!(g.eta > 0.0)) throw std::invalid_argument("gradient flow: eta must be positive");
  if (!(g.s >= 0.0)) throw std::invalid_argument("gradient flow: s must be nonnegative");
}

void require_invertible(double min_eig, double max_eig) {
  if (!(min_eig > 1e-12 * max_eig) || !(max_eig > 0.0)) {
    throw std::runtime_error(
        "ridge_weights: kernel is singular at z = 0; use a positive ridge penalty");
  }
}

}  // namespace

double pooled_to_per_period_penalty(double z_pooled, Eigen::Index T) {
  return z_pooled / static_cast<double>(T);
}

std::string kernel_fingerprint(const Eigen::MatrixXd& K) {
  std::string bytes(reinterpret_cast<const char*>(K.data()),
                    static_cast<std::size_t>(K.size()) * sizeof(double));
  bytes += std::to_string(K.rows()) + "x" + std::to_string(K.cols());
  return fnv1a_hex(bytes);
}

SdfWeights ridge_weights(const KernelMatrix& K, double z) {
  check_square(K);
  if (!(z >= 0.0)) throw std::invalid_argument("ridge_weights: z must be nonnegative");
  const Eigen::Index T = K.rows();
  const double inv_t = 1.0 / static_cast<double>(T);
  const Eigen::MatrixXd scaled = 0.5 * (K.values + K.values.transpose()) * inv_t;

  if (z == 0.0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scaled, Eigen::EigenvaluesOnly);
    require_invertible(eig.eigenvalues().minCoeff(), eig.eigenvalues().maxCoeff());
  }

  Eigen::MatrixXd A = scaled;
  A.diagonal().array() += z;
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(T);

  Eigen::LLT<Eigen::MatrixXd> llt(A);
  double jitter = 1e-10 * scaled.trace() * inv_t;
  for (int attempt = 0; llt.info() != Eigen::Success && attempt < 3; ++attempt) {
    Eigen::MatrixXd jittered = A;
    jittered.diagonal().array() += jitter;
    llt.compute(jittered);
    jitter *= 10.0;
  }
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("ridge_weights: Cholesky failed after jitter escalation");
  }
  return {inv_t * llt.solve(ones), RidgeMode{z}, kernel_fingerprint(K.values)};
}

SdfWeights gd_weights(const KernelMatrix& K, double eta, double s) {
  check_square(K);
  return SpectralSolver(K).gradient_flow(eta, s);
}

std::vector<double> shrinkage_profile(const std::vector<double>& eigenvalues,
                                      const WeightMode& mode) {
  check_mode(mode);
  std::vector<double> out;
  out.reserve(eigenvalues.size());
  for (double x : eigenvalues) {
    if (x < 0.0) throw std::invalid_argument("shrinkage_profile: eigenvalues must be >= 0");
    out.push_back(evaluate(x, mode));
  }
  return out;
}

std::vector<double> shrink_factors(const std::vector<double>& eigenvalues, const WeightMode& mode) {
  std::vector<double> f = shrinkage_profile(eigenvalues, mode);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] *= eigenvalues[i];
  return f;
}

double sdf_return(const Eigen::VectorXd& cross_row, const SdfWeights& weights) {
  if (cross_row.size() != weights.xi.size()) {
    throw std::invalid_argument("sdf_return: cross row and weights differ in length");
  }
  return cross_row.dot(weights.xi);
}

SpectralSolver::SpectralSolver(const KernelMatrix& K) {
  check_square(K);
  const double inv_t = 1.0 / static_cast<double>(K.rows());
  const Eigen::MatrixXd scaled = 0.5 * (K.values + K.values.transpose()) * inv_t;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scaled);
  if (eig.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
  eigenvectors_ = eig.eigenvectors();
  eigenvalues_ = eig.eigenvalues();
  projected_ones_ = eigenvectors_.transpose() * Eigen::VectorXd::Ones(K.rows());
  fingerprint_ = kernel_fingerprint(K.values);
}

SdfWeights SpectralSolver::apply(const WeightMode& mode) const {
  check_mode(mode);
  Eigen::VectorXd filtered(eigenvalues_.size());
  for (Eigen::Index i = 0; i < eigenvalues_.size(); ++i) {
    filtered(i) = evaluate(eigenvalues_(i), mode) * projected_ones_(i);
  }
  const double inv_t = 1.0 / static_cast<double>(eigenvalues_.size());
  return {inv_t * (eigenvectors_ * filtered), mode, fingerprint_};
}

SdfWeights SpectralSolver::ridge(double z) const {
  if (z == 0.0) require_invertible(eigenvalues_.minCoeff(), eigenvalues_.maxCoeff());
  return apply(RidgeMode{z});
}

SdfWeights SpectralSolver::gradient_flow(double eta, double s) const {
  return apply(GradientFlowMode{eta, s});
}

SdfWeights SpectralSolver::solve(const WeightMode& mode) const {
  if (const auto* r = std::get_if<RidgeMode>(&mode)) return ridge(r->z);
  const auto& g = std::get<GradientFlowMode>(mode);
  return gradient_flow(g.eta, g.s);
}

Eigen::VectorXd msrr_primal(const Eigen::MatrixXd& F, double z) {
  const double inv_t = 1.0 / static_cast<double>(F.cols());
  Eigen::MatrixXd A = inv_t * F * F.transpose();
  A.diagonal().array() += z;
  const Eigen::VectorXd rhs = inv_t * F.rowwise().sum();
  return A.ldlt().solve(rhs);
}

Eigen::VectorXd msrr_dual(const Eigen::MatrixXd& F, double z) {
  const double inv_t = 1.0 / static_cast<double>(F.cols());
  Eigen::MatrixXd A = inv_t * F.transpose() * F;
  A.diagonal().array() += z;
  const Eigen::VectorXd w = A.ldlt().solve(Eigen::VectorXd::Ones(F.cols()));
  return inv_t * (F * w);
}

RandomFeatureSdf::RandomFeatureSdf(const PanelDataset& panel, std::size_t num_features,
                                   std::uint64_t seed, double z, const ArchitectureSpec& shallow,
                                   const Normalization& norm)
    : arch_(shallow), norm_(norm) {
  arch_.validate();
  if (arch_.depth != 1) throw std::invalid_argument("random features need a depth-1 architecture");
  if (num_features == 0) throw std::invalid_argument("random features: P must be >= 1");
  if (panel.num_characteristics() != arch_.input_dim) {
    throw std::invalid_argument("random features: characteristic count != input_dim");
  }
  const auto P = static_cast<Eigen::Index>(num_features);
  const Eigen::Index n0 = arch_.input_dim;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double w_scale = arch_.sigma_w[0] / std::sqrt(static_cast<double>(n0));
  W_.resize(n0, P);
  b_.resize(P);
  for (Eigen::Index k = 0; k < P; ++k) {
    for (Eigen::Index i = 0; i < n0; ++i) W_(i, k) = w_scale * normal(rng);
    b_(k) = arch_.sigma_b[0] * normal(rng);
  }

  factors_.resize(P, static_cast<Eigen::Index>(panel.size()));
  for (std::size_t t = 0; t < panel.size(); ++t) {
    const auto& p = panel.periods[t];
    factors_.col(static_cast<Eigen::Index>(t)) = factor_returns(p.r_next, p.X);
  }
  theta_ = P > factors_.cols() ? msrr_dual(factors_, z) : msrr_primal(factors_, z);
}

Eigen::MatrixXd RandomFeatureSdf::features(const Eigen::MatrixXd& X) const {
  Eigen::MatrixXd pre = X * W_;
  pre.rowwise() += b_;
  const Activation act = arch_.activation;
  const double out_scale = arch_.sigma_w[1];
  return pre.unaryExpr([act, out_scale](double u) { return out_scale * activate(u, act); });
}

Eigen::VectorXd RandomFeatureSdf::factor_returns(const Eigen::VectorXd& r,
                                                 const Eigen::MatrixXd& X) const {
  if (X.rows() != r.size() || X.cols() != W_.rows()) {
    throw std::invalid_argument("random features: state dimensions mismatch");
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(W_.cols())) /
                       std::pow(static_cast<double>(X.rows()), norm_.alpha);
  return scale * (features(X).transpose() * r);
}

Eigen::VectorXd RandomFeatureSdf::in_sample_returns() const {
  return factors_.transpose() * theta_;
}

double RandomFeatureSdf::oos_return(const Eigen::VectorXd& r, const Eigen::MatrixXd& X) const {
  return theta_.dot(factor_returns(r, X));
}

}  // namespace widesdf
