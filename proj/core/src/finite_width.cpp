#include "widesdf/finite_width.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <thread>

#include "widesdf/kernel_core.hpp"

namespace widesdf {

namespace {

double inv_sqrt(int n) { return 1.0 / std::sqrt(static_cast<double>(n)); }

Eigen::VectorXd apply(const Eigen::VectorXd& z, Activation act) {
  return z.unaryExpr([act](double u) { return activate(u, act); });
}

Eigen::VectorXd apply_derivative(const Eigen::VectorXd& z, Activation act) {
  return z.unaryExpr([act](double u) { return activate_derivative(u, act); });
}

// Post-activations y^(0..L) and backpropagated deltas d^(0..L-1) for one input.
struct Tape {
  std::vector<Eigen::VectorXd> ys;
  std::vector<Eigen::VectorXd> deltas;
  double output = 0.0;
};

Tape record(const MlpParams& params, std::span<const double> x) {
  const int L = params.arch.depth;
  if (x.size() != static_cast<std::size_t>(params.widths[0])) {
    throw std::invalid_argument("mlp: input length does not match n_0");
  }
  const Activation act = params.arch.activation;
  Tape tape;
  tape.ys.reserve(static_cast<std::size_t>(L) + 1);
  tape.ys.emplace_back(Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())));
  std::vector<Eigen::VectorXd> pre;
  for (int l = 0; l < L; ++l) {
    Eigen::VectorXd z = params.weights[l] * tape.ys.back() * inv_sqrt(params.widths[l]) + params.biases[l];
    tape.ys.push_back(apply(z, act));
    pre.push_back(std::move(z));
  }
  tape.output = params.weights[L].row(0).dot(tape.ys.back()) * inv_sqrt(params.widths[L]);

  tape.deltas.resize(static_cast<std::size_t>(L));
  Eigen::VectorXd upstream = params.weights[L].row(0).transpose() * inv_sqrt(params.widths[L]);
  for (int l = L - 1; l >= 0; --l) {
    tape.deltas[l] = upstream.cwiseProduct(apply_derivative(pre[l], act));
    if (l > 0) upstream = params.weights[l].transpose() * tape.deltas[l] * inv_sqrt(params.widths[l]);
  }
  return tape;
}

double tape_kernel(const MlpParams& params, const Tape& a, const Tape& b) {
  const int L = params.arch.depth;
  double acc = 0.0;
  for (int l = 0; l < L; ++l) {
    const double dd = a.deltas[l].dot(b.deltas[l]);
    const double yy = a.ys[l].dot(b.ys[l]) / static_cast<double>(params.widths[l]);
    acc += dd * (yy + 1.0);
  }
  acc += a.ys[L].dot(b.ys[L]) / static_cast<double>(params.widths[L]);
  return acc;
}

}  // namespace

Eigen::Index MlpParams::num_parameters() const {
  Eigen::Index total = 0;
  for (const auto& w : weights) total += w.size();
  for (const auto& b : biases) total += b.size();
  return total;
}

MlpParams init_mlp(const ArchitectureSpec& arch, std::span<const int> hidden_widths,
                   std::uint64_t seed) {
  arch.validate();
  if (hidden_widths.size() != static_cast<std::size_t>(arch.depth)) {
    throw std::invalid_argument("init_mlp: need one width per hidden layer");
  }
  MlpParams params;
  params.arch = arch;
  params.seed = seed;
  params.widths.push_back(arch.input_dim);
  for (int w : hidden_widths) {
    if (w <= 0) throw std::invalid_argument("init_mlp: widths must be positive");
    params.widths.push_back(w);
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto fill = [&](double* data, Eigen::Index n, double scale) {
    if (scale == 0.0) {
      std::fill(data, data + n, 0.0);
      return;
    }
    for (Eigen::Index i = 0; i < n; ++i) data[i] = scale * normal(rng);
  };
  const int L = arch.depth;
  for (int l = 0; l <= L; ++l) {
    const int rows = l < L ? params.widths[l + 1] : 1;
    Eigen::MatrixXd W(rows, params.widths[l]);
    fill(W.data(), W.size(), arch.sigma_w[l]);
    params.weights.push_back(std::move(W));
    if (l < L) {
      Eigen::VectorXd b(rows);
      fill(b.data(), b.size(), arch.sigma_b[l]);
      params.biases.push_back(std::move(b));
    }
  }
  return params;
}

MlpParams init_mlp(const ArchitectureSpec& arch, int width, std::uint64_t seed) {
  const std::vector<int> widths(static_cast<std::size_t>(std::max(arch.depth, 0)), width);
  return init_mlp(arch, widths, seed);
}

ForwardPass forward(const MlpParams& params, std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(params.widths[0])) {
    throw std::invalid_argument("forward: input length does not match n_0");
  }
  const int L = params.arch.depth;
  const Activation act = params.arch.activation;
  ForwardPass out;
  Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  for (int l = 0; l < L; ++l) {
    Eigen::VectorXd z = params.weights[l] * y * inv_sqrt(params.widths[l]) + params.biases[l];
    y = apply(z, act);
    out.preactivations.push_back(std::move(z));
  }
  out.output = params.weights[L].row(0).dot(y) * inv_sqrt(params.widths[L]);
  return out;
}

Eigen::VectorXd forward_batch(const MlpParams& params, const Eigen::MatrixXd& X) {
  if (X.cols() != params.widths[0]) throw std::invalid_argument("forward_batch: wrong input width");
  const int L = params.arch.depth;
  const Activation act = params.arch.activation;
  Eigen::MatrixXd Y = X.transpose();
  for (int l = 0; l < L; ++l) {
    Eigen::MatrixXd Z = params.weights[l] * Y * inv_sqrt(params.widths[l]);
    Z.colwise() += params.biases[l];
    Y = Z.unaryExpr([act](double u) { return activate(u, act); });
  }
  return (params.weights[L] * Y * inv_sqrt(params.widths[L])).transpose();
}

Eigen::VectorXd grad_theta(const MlpParams& params, std::span<const double> x) {
  const Tape tape = record(params, x);
  const int L = params.arch.depth;
  Eigen::VectorXd grad(params.num_parameters());
  Eigen::Index pos = 0;
  for (int l = 0; l <= L; ++l) {
    const double scale = inv_sqrt(params.widths[l]);
    const Eigen::VectorXd& y = tape.ys[l];
    if (l < L) {
      const Eigen::VectorXd& d = tape.deltas[l];
      for (Eigen::Index i = 0; i < d.size(); ++i) {
        grad.segment(pos, y.size()) = d(i) * scale * y;
        pos += y.size();
      }
      grad.segment(pos, d.size()) = d;
      pos += d.size();
    } else {
      grad.segment(pos, y.size()) = scale * y;
      pos += y.size();
    }
  }
  return grad;
}

double empirical_ntk(const MlpParams& params, std::span<const double> x,
                     std::span<const double> x2) {
  return tape_kernel(params, record(params, x), record(params, x2));
}

Eigen::MatrixXd empirical_ntk_gram(const MlpParams& params, const Eigen::MatrixXd& X) {
  const Eigen::Index n = X.rows();
  std::vector<Tape> tapes;
  tapes.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd row = X.row(i).transpose();
    tapes.push_back(record(params, {row.data(), static_cast<std::size_t>(row.size())}));
  }
  Eigen::MatrixXd gram(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      gram(i, j) = tape_kernel(params, tapes[i], tapes[j]);
      gram(j, i) = gram(i, j);
    }
  }
  return gram;
}

NngpReport nngp_distribution_test(const ArchitectureSpec& arch, std::span<const int> hidden_widths,
                                  int n_seeds, const Eigen::MatrixXd& x_batch,
                                  std::uint64_t base_seed, int workers) {
  if (n_seeds < 200) throw std::invalid_argument("nngp_distribution_test: need at least 200 seeds");
  const std::vector<int> widths(hidden_widths.begin(), hidden_widths.end());
  const Eigen::Index B = x_batch.rows();
  Eigen::MatrixXd samples(n_seeds, B);

  auto run = [&](int worker, int stride) {
    for (int s = worker; s < n_seeds; s += stride) {
      const MlpParams params = init_mlp(arch, widths, base_seed + static_cast<std::uint64_t>(s));
      samples.row(s) = forward_batch(params, x_batch).transpose();
    }
  };
  const int threads = std::clamp(workers, 1, n_seeds);
  if (threads == 1) {
    run(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < threads; ++w) pool.emplace_back(run, w, threads);
  }

  NngpReport report;
  report.num_seeds = n_seeds;
  report.sample_mean = samples.colwise().mean().transpose();
  const Eigen::MatrixXd centered = samples.rowwise() - report.sample_mean.transpose();
  report.sample_covariance = centered.transpose() * centered / static_cast<double>(n_seeds - 1);
  report.sample_std = report.sample_covariance.diagonal().cwiseSqrt();
  report.analytic_covariance = kernel_block(x_batch, x_batch, arch, KernelType::NNGP);

  report.max_relative_deviation = 0.0;
  for (Eigen::Index i = 0; i < B; ++i) {
    for (Eigen::Index j = 0; j < B; ++j) {
      const double k = report.analytic_covariance(i, j);
      const double dev = std::abs(report.sample_covariance(i, j) - k) / std::abs(k);
      report.max_relative_deviation = std::max(report.max_relative_deviation, dev);
    }
  }
  report.mean_within_clt = true;
  const double root_n = std::sqrt(static_cast<double>(n_seeds));
  for (Eigen::Index i = 0; i < B; ++i) {
    if (std::abs(report.sample_mean(i)) > 4.0 * report.sample_std(i) / root_n) {
      report.mean_within_clt = false;
    }
    const Eigen::ArrayXd c = centered.col(i).array();
    const double m2 = c.square().mean();
    const double skew = c.cube().mean() / std::pow(m2, 1.5);
    const double kurt = c.square().square().mean() / (m2 * m2);
    report.jarque_bera.push_back(static_cast<double>(n_seeds) / 6.0 *
                                 (skew * skew + 0.25 * (kurt - 3.0) * (kurt - 3.0)));
  }
  return report;
}

GpPosterior gp_posterior(const KernelFunction& kernel, const Eigen::MatrixXd& X_train,
                         const Eigen::VectorXd& Y_train, double noise_var,
                         const Eigen::VectorXd& x_star) {
  if (!(noise_var >= 0.0)) throw std::invalid_argument("gp_posterior: noise variance must be >= 0");
  if (X_train.rows() != Y_train.size()) throw std::invalid_argument("gp_posterior: X and Y misaligned");
  const double prior = kernel(x_star, x_star);
  const Eigen::Index n = X_train.rows();
  if (n == 0) return {0.0, prior};

  Eigen::MatrixXd A(n, n);
  Eigen::VectorXd k_star(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd xi = X_train.row(i).transpose();
    k_star(i) = kernel(xi, x_star);
    for (Eigen::Index j = 0; j <= i; ++j) {
      A(i, j) = kernel(xi, X_train.row(j).transpose());
      A(j, i) = A(i, j);
    }
    A(i, i) += noise_var;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  const double scale = A.diagonal().cwiseAbs().maxCoeff();
  if (llt.info() != Eigen::Success ||
      llt.matrixL().toDenseMatrix().diagonal().array().square().minCoeff() <= 1e-12 * scale) {
    throw std::runtime_error("gp_posterior: singular system (duplicate inputs with zero noise?)");
  }
  const Eigen::VectorXd alpha = llt.solve(Y_train);
  const Eigen::VectorXd v = llt.matrixL().solve(k_star);
  return {k_star.dot(alpha), std::max(0.0, prior - v.squaredNorm())};
}

}  // namespace widesdf
