#include "widesdf/kernel_core.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>

namespace widesdf {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double scaled_dot(const double* x, const double* y, int n) {
  double acc = 0.0;
  for (int k = 0; k < n; ++k) acc += x[k] * y[k];
  return acc / static_cast<double>(n);
}

// Sigma^(l)(x, x) for l = 1..L, written to out[0..L-1].
void self_sequence(const double* x, const ArchitectureSpec& arch, double* out) {
  double s = scaled_dot(x, x, arch.input_dim);
  out[0] = s;
  for (int l = 1; l < arch.depth; ++l) {
    const double w2 = arch.sigma_w[l - 1] * arch.sigma_w[l - 1];
    const double b2 = arch.sigma_b[l - 1] * arch.sigma_b[l - 1];
    const double q = w2 * s + b2;
    s = dual_activation(q, q, q, arch.activation).v;
    out[l] = s;
  }
}

// Cross recursion given the precomputed self-variance sequences of both sides.
NtkValues cross_recursion(double sigma1_xy, const double* self_x, const double* self_y,
                          const ArchitectureSpec& arch, NtkTrace* trace = nullptr) {
  double sxy = sigma1_xy;
  double theta = sxy + 1.0;
  if (trace) {
    trace->sigma[1] = sxy;
    trace->theta[1] = theta;
  }
  const int depth = arch.depth;
  for (int l = 1; l <= depth; ++l) {
    const double w2 = arch.sigma_w[l - 1] * arch.sigma_w[l - 1];
    const double b2 = arch.sigma_b[l - 1] * arch.sigma_b[l - 1];
    const DualValues d =
        dual_activation(w2 * self_x[l - 1] + b2, w2 * self_y[l - 1] + b2, w2 * sxy + b2,
                        arch.activation);
    const double sigma_hat = arch.sigma_w[l] * arch.sigma_w[l] * d.vdot;
    sxy = d.v;
    theta = theta * sigma_hat + sxy + (l < depth ? 1.0 : 0.0);
    if (trace) {
      trace->sigma[l + 1] = sxy;
      trace->sigma_hat[l + 1] = sigma_hat;
      trace->theta[l + 1] = theta;
    }
  }
  return {theta, sxy};
}

void check_pair(std::span<const double> x, std::span<const double> x2,
                const ArchitectureSpec& arch) {
  arch.validate();
  if (x.size() != static_cast<std::size_t>(arch.input_dim) ||
      x2.size() != static_cast<std::size_t>(arch.input_dim)) {
    throw std::invalid_argument("ntk_recursion: input length does not match input_dim");
  }
}

}  // namespace

std::string_view to_string(KernelType which) {
  return which == KernelType::NTK ? "ntk" : "nngp";
}

KernelType parse_kernel_type(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (lower == "ntk") return KernelType::NTK;
  if (lower == "nngp") return KernelType::NNGP;
  throw std::invalid_argument("unknown kernel type: " + std::string(name));
}

double nngp_step(const PairCovariance& prev, double sigma_w, double sigma_b, Activation kind) {
  const double w2 = sigma_w * sigma_w;
  const double b2 = sigma_b * sigma_b;
  return dual_activation(w2 * prev.xx + b2, w2 * prev.yy + b2, w2 * prev.xy + b2, kind).v;
}

NtkValues ntk_recursion(std::span<const double> x, std::span<const double> x2,
                        const ArchitectureSpec& arch) {
  check_pair(x, x2, arch);
  std::vector<double> self_x(arch.depth), self_y(arch.depth);
  self_sequence(x.data(), arch, self_x.data());
  self_sequence(x2.data(), arch, self_y.data());
  return cross_recursion(scaled_dot(x.data(), x2.data(), arch.input_dim), self_x.data(),
                         self_y.data(), arch);
}

NtkTrace ntk_trace(std::span<const double> x, std::span<const double> x2,
                   const ArchitectureSpec& arch) {
  check_pair(x, x2, arch);
  const auto n = static_cast<std::size_t>(arch.depth) + 2;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  NtkTrace trace{std::vector<double>(n, nan), std::vector<double>(n, nan),
                 std::vector<double>(n, nan)};
  std::vector<double> self_x(arch.depth), self_y(arch.depth);
  self_sequence(x.data(), arch, self_x.data());
  self_sequence(x2.data(), arch, self_y.data());
  cross_recursion(scaled_dot(x.data(), x2.data(), arch.input_dim), self_x.data(), self_y.data(),
                  arch, &trace);
  return trace;
}

double output_kernel(const NtkValues& values, const ArchitectureSpec& arch, KernelType which) {
  if (which == KernelType::NTK) return values.theta;
  const double w = arch.sigma_w.back();
  return w * w * values.sigma;
}

Eigen::MatrixXd kernel_block(const Eigen::MatrixXd& X, const Eigen::MatrixXd& X2,
                             const ArchitectureSpec& arch, KernelType which, int workers) {
  arch.validate();
  if (X.cols() != arch.input_dim || X2.cols() != arch.input_dim) {
    throw std::invalid_argument("kernel_gram: column count does not match input_dim");
  }
  const RowMatrix A = X;
  const RowMatrix B = X2;
  const Eigen::Index n = A.rows();
  const Eigen::Index m = B.rows();
  const int depth = arch.depth;

  RowMatrix self_a(n, depth), self_b(m, depth);
  for (Eigen::Index i = 0; i < n; ++i) self_sequence(A.row(i).data(), arch, self_a.row(i).data());
  for (Eigen::Index j = 0; j < m; ++j) self_sequence(B.row(j).data(), arch, self_b.row(j).data());

  Eigen::MatrixXd out(n, m);
  auto fill_rows = [&](Eigen::Index begin, Eigen::Index end) {
    for (Eigen::Index i = begin; i < end; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) {
        const NtkValues v =
            cross_recursion(scaled_dot(A.row(i).data(), B.row(j).data(), arch.input_dim),
                            self_a.row(i).data(), self_b.row(j).data(), arch);
        out(i, j) = output_kernel(v, arch, which);
      }
    }
  };

  const Eigen::Index threads = std::clamp<Eigen::Index>(workers, 1, std::max<Eigen::Index>(n, 1));
  if (threads == 1) {
    fill_rows(0, n);
    return out;
  }
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (Eigen::Index t = 0; t < threads; ++t) {
    pool.emplace_back(fill_rows, n * t / threads, n * (t + 1) / threads);
  }
  pool.clear();
  return out;
}

KernelMatrix kernel_gram(const Eigen::MatrixXd& X, const Eigen::MatrixXd& X2,
                         const ArchitectureSpec& arch, KernelType which, int workers) {
  KernelMatrix k;
  k.values = kernel_block(X, X2, arch, which, workers);
  k.row_labels = index_labels(X.rows());
  k.col_labels = index_labels(X2.rows());
  k.kind = KernelMatrixKind::StockLevel;
  return k;
}

}  // namespace widesdf
