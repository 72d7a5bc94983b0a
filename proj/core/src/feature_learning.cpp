#include "widesdf/feature_learning.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "widesdf/ptk.hpp"

namespace widesdf {

MetricMatrix::MetricMatrix(Eigen::MatrixXd M) : M_(std::move(M)) {
  if (M_.rows() != M_.cols() || M_.rows() == 0) {
    throw std::invalid_argument("metric: matrix must be square and nonempty");
  }
  if (!M_.allFinite()) throw std::invalid_argument("metric: non-finite entries");
  const double scale = std::max(M_.cwiseAbs().maxCoeff(), 1e-300);
  if ((M_ - M_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument("metric: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M_, Eigen::EigenvaluesOnly);
  const double top = eig.eigenvalues().maxCoeff();
  if (eig.eigenvalues().minCoeff() < -1e-10 * std::max(top, 0.0)) {
    throw std::invalid_argument("metric: matrix is not positive semidefinite");
  }
  if (!(M_.trace() > 0.0)) throw std::invalid_argument("metric: trace must be positive");
}

MetricMatrix MetricMatrix::identity(int d) { return MetricMatrix(Eigen::MatrixXd::Identity(d, d)); }

RadialProfile RadialProfile::gaussian(double ell) {
  if (!(ell > 0.0)) throw std::invalid_argument("profile bandwidth must be positive");
  const double c = 1.0 / (2.0 * ell * ell);
  return {[c](double u) { return std::exp(-c * u); },
          [c](double u) { return -c * std::exp(-c * u); }, "gaussian"};
}

RadialProfile RadialProfile::laplace(double ell) {
  if (!(ell > 0.0)) throw std::invalid_argument("profile bandwidth must be positive");
  return {[ell](double u) { return std::exp(-std::sqrt(std::max(u, 0.0)) / ell); },
          [ell](double u) {
            const double r = std::max(std::sqrt(std::max(u, 0.0)), 1e-12);
            return -std::exp(-r / ell) / (2.0 * ell * r);
          },
          "laplace"};
}

RadialProfile RadialProfile::identity() {
  return {[](double u) { return u; }, [](double) { return 1.0; }, "identity"};
}

RadialProfile RadialProfile::parse(std::string_view name, double ell) {
  if (name == "gaussian") return gaussian(ell);
  if (name == "laplace") return laplace(ell);
  throw std::invalid_argument("unknown radial profile: " + std::string(name));
}

Eigen::MatrixXd mahalanobis_sq_dist(const Eigen::MatrixXd& X, const Eigen::MatrixXd& X2,
                                    const MetricMatrix& M) {
  if (X.cols() != M.dim() || X2.cols() != M.dim()) {
    throw std::invalid_argument("mahalanobis: dimension mismatch");
  }
  const Eigen::MatrixXd XM = X * M.matrix();
  const Eigen::VectorXd a = (XM.array() * X.array()).rowwise().sum();
  const Eigen::VectorXd b = ((X2 * M.matrix()).array() * X2.array()).rowwise().sum();
  Eigen::MatrixXd q = -2.0 * XM * X2.transpose();
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
      const double v = q(i, j) + a(i) + b(j);
      // below the cancellation error of the expanded form the points coincide
      q(i, j) = v > 1e-13 * (a(i) + b(j)) ? v : 0.0;
    }
  }
  return q;
}

MahalanobisGram mahalanobis_kernel_gram(const Eigen::MatrixXd& X, const Eigen::MatrixXd& X2,
                                        const MetricMatrix& M, const RadialProfile& profile) {
  const Eigen::MatrixXd q = mahalanobis_sq_dist(X, X2, M);
  return {q.unaryExpr(profile.phi), q.unaryExpr(profile.phi_prime)};
}

namespace {

void check_alignment(const PanelDataset& panel, const SdfWeights& xi, const MetricMatrix& M) {
  if (xi.xi.size() != static_cast<Eigen::Index>(panel.size())) {
    throw std::invalid_argument("feature learning: xi length differs from panel length");
  }
  if (panel.num_characteristics() != M.dim()) {
    throw std::invalid_argument("feature learning: metric dimension mismatch");
  }
}

Eigen::MatrixXd normalize_metric(const Eigen::MatrixXd& G, MetricUpdate rule) {
  const auto d = static_cast<double>(G.rows());
  const Eigen::MatrixXd sym = 0.5 * (G + G.transpose());
  if (rule == MetricUpdate::Trace) return d * sym / sym.trace();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  Eigen::MatrixXd S = eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
  S = 0.5 * (S + S.transpose());
  return d * S / S.trace();
}

}  // namespace

Eigen::VectorXd grad_w(const Eigen::VectorXd& x, const PanelDataset& panel, const SdfWeights& xi,
                       const MetricMatrix& M, const RadialProfile& profile) {
  check_alignment(panel, xi, M);
  if (x.size() != M.dim()) throw std::invalid_argument("grad_w: point has wrong dimension");
  const Eigen::MatrixXd& Mm = M.matrix();
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(x.size());
  for (std::size_t t = 0; t < panel.size(); ++t) {
    const auto& p = panel.periods[t];
    const double xi_t = xi.xi(static_cast<Eigen::Index>(t));
    for (Eigen::Index j = 0; j < p.size(); ++j) {
      const Eigen::VectorXd diff = x - p.X.row(j).transpose();
      const Eigen::VectorXd Md = Mm * diff;
      const double q = diff.dot(Md);
      acc += (xi_t * p.r_next(j) * 2.0 * profile.phi_prime(q)) * Md;
    }
  }
  return acc;
}

Eigen::MatrixXd agop(const PanelDataset& panel, const SdfWeights& xi, const MetricMatrix& M,
                     const RadialProfile& profile) {
  check_alignment(panel, xi, M);
  const Eigen::Index d = M.dim();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(d, d);
  for (const auto& rows : panel.periods) {
    const Eigen::Index n = rows.size();
    Eigen::VectorXd row_sums = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd weighted = Eigen::MatrixXd::Zero(n, d);
    for (std::size_t t = 0; t < panel.size(); ++t) {
      const auto& cols = panel.periods[t];
      const Eigen::VectorXd gamma = 2.0 * xi.xi(static_cast<Eigen::Index>(t)) * cols.r_next;
      const Eigen::MatrixXd q = mahalanobis_sq_dist(rows.X, cols.X, M);
      // coincident points contribute nothing (x - x~ = 0); dropping them also
      // keeps a singular phi'(0) out of the cancellation below
      const Eigen::MatrixXd k1 = q.unaryExpr([&profile](double u) {
        return u > 0.0 ? profile.phi_prime(u) : 0.0;
      });
      const Eigen::MatrixXd k_gamma = k1 * gamma.asDiagonal();
      row_sums += k_gamma.rowwise().sum();
      weighted += k_gamma * cols.X;
    }
    const Eigen::MatrixXd grads = (row_sums.asDiagonal() * rows.X - weighted) * M.matrix();
    G += grads.transpose() * grads / static_cast<double>(n);
  }
  G /= static_cast<double>(panel.size());
  return 0.5 * (G + G.transpose());
}

Eigen::MatrixXd agop_pointwise(const PanelDataset& panel, const SdfWeights& xi,
                               const MetricMatrix& M, const RadialProfile& profile) {
  check_alignment(panel, xi, M);
  const Eigen::Index d = M.dim();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(d, d);
  for (const auto& p : panel.periods) {
    Eigen::MatrixXd block = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const Eigen::VectorXd g = grad_w(p.X.row(i).transpose(), panel, xi, M, profile);
      block += g * g.transpose();
    }
    G += block / static_cast<double>(p.size());
  }
  return G / static_cast<double>(panel.size());
}

MetricUpdate parse_metric_update(std::string_view name) {
  if (name == "trace") return MetricUpdate::Trace;
  if (name == "sqrt") return MetricUpdate::SqrtTrace;
  throw std::invalid_argument("unknown metric update rule: " + std::string(name));
}

KernelMatrix mahalanobis_portfolio_kernel(const PanelDataset& panel, const MetricMatrix& M,
                                          const RadialProfile& profile) {
  const BlockKernel block = [&M, &profile](const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    return mahalanobis_sq_dist(A, B, M).unaryExpr(profile.phi).eval();
  };
  return assemble_portfolio_kernel(panel, block, Normalization{0.0}, ChunkPlan::whole_blocks(panel));
}

double msrr_objective(const KernelMatrix& K, const Eigen::VectorXd& xi, double z) {
  const auto T = static_cast<double>(K.rows());
  const Eigen::VectorXd fitted = K.values * xi;
  return (fitted.array() - 1.0).square().sum() / T + z * xi.dot(fitted);
}

FeatureFit alternate_fit(const PanelDataset& panel, double z, const RadialProfile& profile,
                         int iters, MetricUpdate rule, const std::optional<MetricMatrix>& initial) {
  if (iters < 1) throw std::invalid_argument("alternate_fit: iters must be >= 1");
  if (panel.size() == 0) throw std::invalid_argument("alternate_fit: empty panel");
  MetricMatrix metric = initial.value_or(MetricMatrix::identity(panel.num_characteristics()));
  Eigen::VectorXd previous = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(panel.size()));

  FeatureFit fit{metric, SdfWeights{}, {}, false, {}};
  for (int it = 0; it < iters; ++it) {
    const KernelMatrix K = mahalanobis_portfolio_kernel(panel, metric, profile);
    FeatureIteration diag;
    diag.iteration = it;
    diag.objective_before_solve = msrr_objective(K, previous, z);
    SdfWeights xi = ridge_weights(K, z);
    diag.objective_after_solve = msrr_objective(K, xi.xi, z);

    const Eigen::MatrixXd G = agop(panel, xi, metric, profile);
    diag.agop_trace = G.trace();
    fit.xi = xi;
    previous = xi.xi;
    if (!(diag.agop_trace > 0.0) || !G.allFinite()) {
      fit.degenerate = true;
      fit.message = "feature matrix vanished at iteration " + std::to_string(it);
      fit.iterations.push_back(diag);
      break;
    }
    metric = MetricMatrix(normalize_metric(G, rule));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(metric.matrix(), Eigen::EigenvaluesOnly);
    for (Eigen::Index k = eig.eigenvalues().size() - 1; k >= 0; --k) {
      diag.metric_eigenvalues.push_back(eig.eigenvalues()(k));
    }
    fit.iterations.push_back(diag);
  }
  fit.metric = metric;
  return fit;
}

double principal_angle_to_axes(const Eigen::MatrixXd& M, const std::vector<int>& axes) {
  const auto k = static_cast<Eigen::Index>(axes.size());
  if (k == 0 || k > M.rows()) throw std::invalid_argument("principal angle: bad axis count");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (M + M.transpose()));
  const Eigen::MatrixXd top = eig.eigenvectors().rightCols(k);
  Eigen::MatrixXd overlap(k, k);
  for (Eigen::Index a = 0; a < k; ++a) overlap.row(a) = top.row(axes[static_cast<std::size_t>(a)]);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(overlap);
  const double smallest = std::clamp(svd.singularValues().minCoeff(), 0.0, 1.0);
  return std::acos(smallest);
}

}  // namespace widesdf
