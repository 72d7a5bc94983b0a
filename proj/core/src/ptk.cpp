#include "widesdf/ptk.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace widesdf {

namespace {

double normalizer(Eigen::Index n1, Eigen::Index n2, double alpha) {
  return std::pow(static_cast<double>(n1), alpha) * std::pow(static_cast<double>(n2), alpha);
}

// R1' K(X1, X2) R2, streaming X1 in row slices of at most max_rows.
double contract_block(const Eigen::MatrixXd& X1, const Eigen::VectorXd& r1,
                      const Eigen::MatrixXd& X2, const Eigen::VectorXd& r2,
                      const BlockKernel& kernel, std::size_t max_rows) {
  const Eigen::Index n1 = X1.rows();
  const Eigen::Index step =
      max_rows == 0 ? n1 : std::max<Eigen::Index>(1, static_cast<Eigen::Index>(max_rows));
  double acc = 0.0;
  for (Eigen::Index begin = 0; begin < n1; begin += step) {
    const Eigen::Index rows = std::min(step, n1 - begin);
    const Eigen::MatrixXd block = kernel(X1.middleRows(begin, rows), X2);
    acc += r1.segment(begin, rows).dot(block * r2);
  }
  return acc;
}

void check_alpha(const Normalization& norm) {
  if (!(norm.alpha >= 0.0 && norm.alpha <= 1.0)) {
    throw std::invalid_argument("normalization alpha must lie in [0, 1]");
  }
}

}  // namespace

BlockKernel make_block_kernel(const ArchitectureSpec& arch, KernelType which) {
  arch.validate();
  return [arch, which](const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    return kernel_block(A, B, arch, which, 1);
  };
}

ChunkPlan ChunkPlan::for_panel(const PanelDataset& panel, std::size_t memory_budget_bytes) {
  ChunkPlan plan = whole_blocks(panel);
  Eigen::Index widest = 1;
  for (const auto& p : panel.periods) widest = std::max(widest, p.size());
  const std::size_t row_bytes = static_cast<std::size_t>(widest) * sizeof(double);
  plan.max_block_rows = std::max<std::size_t>(1, memory_budget_bytes / row_bytes);
  return plan;
}

ChunkPlan ChunkPlan::whole_blocks(const PanelDataset& panel) {
  ChunkPlan plan;
  const std::size_t T = panel.size();
  for (std::size_t t1 = 0; t1 < T; ++t1) {
    for (std::size_t t2 = t1; t2 < T; ++t2) plan.schedule.emplace_back(t1, t2);
  }
  return plan;
}

bool ChunkPlan::covers(std::size_t num_periods) const {
  std::vector<int> seen(num_periods * num_periods, 0);
  for (const auto& [t1, t2] : schedule) {
    if (t1 > t2 || t2 >= num_periods) return false;
    if (++seen[t1 * num_periods + t2] > 1) return false;
  }
  for (std::size_t t1 = 0; t1 < num_periods; ++t1) {
    for (std::size_t t2 = t1; t2 < num_periods; ++t2) {
      if (seen[t1 * num_periods + t2] != 1) return false;
    }
  }
  return true;
}

double ptk_entry(std::size_t t1, std::size_t t2, const PanelDataset& panel,
                 const ArchitectureSpec& arch, KernelType which, const Normalization& norm) {
  if (t1 >= panel.size() || t2 >= panel.size()) throw std::out_of_range("ptk_entry: unknown period");
  check_alpha(norm);
  const auto& a = panel.periods[t1];
  const auto& b = panel.periods[t2];
  const Eigen::MatrixXd K = kernel_block(a.X, b.X, arch, which);
  return a.r_next.dot(K * b.r_next) / normalizer(a.size(), b.size(), norm.alpha);
}

double ptk_entry(std::string_view date1, std::string_view date2, const PanelDataset& panel,
                 const ArchitectureSpec& arch, KernelType which, const Normalization& norm) {
  return ptk_entry(panel.index_of(date1), panel.index_of(date2), panel, arch, which, norm);
}

KernelMatrix assemble_portfolio_kernel(const PanelDataset& panel, const BlockKernel& kernel,
                                       const Normalization& norm, const ChunkPlan& plan,
                                       int workers) {
  check_alpha(norm);
  const std::size_t T = panel.size();
  if (!plan.covers(T)) throw std::invalid_argument("chunk plan does not cover the upper triangle");

  KernelMatrix out;
  out.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(T));
  out.row_labels = panel.dates();
  out.col_labels = out.row_labels;
  out.kind = KernelMatrixKind::PortfolioIS;

  auto run = [&](std::size_t worker, std::size_t stride) {
    for (std::size_t k = worker; k < plan.schedule.size(); k += stride) {
      const auto [t1, t2] = plan.schedule[k];
      const auto& a = panel.periods[t1];
      const auto& b = panel.periods[t2];
      const double value = contract_block(a.X, a.r_next, b.X, b.r_next, kernel,
                                          plan.max_block_rows) /
                           normalizer(a.size(), b.size(), norm.alpha);
      const auto i = static_cast<Eigen::Index>(t1);
      const auto j = static_cast<Eigen::Index>(t2);
      out.values(i, j) = value;
      out.values(j, i) = value;
    }
  };

  const auto threads = static_cast<std::size_t>(std::max(1, workers));
  if (threads == 1) {
    run(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(run, w, threads);
  }
  return out;
}

KernelMatrix assemble_is_kernel(const PanelDataset& panel, const ArchitectureSpec& arch,
                                KernelType which, const Normalization& norm,
                                const ChunkPlan& plan, int workers) {
  if (panel.num_characteristics() != arch.input_dim) {
    throw std::invalid_argument("assemble_is_kernel: characteristic count != input_dim");
  }
  return assemble_portfolio_kernel(panel, make_block_kernel(arch, which), norm, plan, workers);
}

Eigen::VectorXd cross_kernel_row(const Eigen::VectorXd& r, const Eigen::MatrixXd& X,
                                 const PanelDataset& panel, const BlockKernel& kernel,
                                 const Normalization& norm) {
  check_alpha(norm);
  if (X.rows() != r.size()) throw std::invalid_argument("cross_kernel_row: R and X misaligned");
  if (X.cols() != panel.num_characteristics()) {
    throw std::invalid_argument("cross_kernel_row: characteristic count mismatch");
  }
  Eigen::VectorXd row(static_cast<Eigen::Index>(panel.size()));
  for (std::size_t t = 0; t < panel.size(); ++t) {
    const auto& p = panel.periods[t];
    row(static_cast<Eigen::Index>(t)) =
        r.dot(kernel(X, p.X) * p.r_next) / normalizer(X.rows(), p.size(), norm.alpha);
  }
  return row;
}

Eigen::VectorXd cross_kernel_row(const Eigen::VectorXd& r, const Eigen::MatrixXd& X,
                                 const PanelDataset& panel, const ArchitectureSpec& arch,
                                 KernelType which, const Normalization& norm) {
  if (X.cols() != arch.input_dim) {
    throw std::invalid_argument("cross_kernel_row: characteristic count != input_dim");
  }
  return cross_kernel_row(r, X, panel, make_block_kernel(arch, which), norm);
}

void save_kernel_cache(const std::filesystem::path& stem, const KernelMatrix& kernel,
                       const KernelCacheMeta& meta) {
  static_assert(std::endian::native == std::endian::little, "cache writer assumes little-endian");
  auto bin_path = stem;
  bin_path += ".bin";
  auto json_path = stem;
  json_path += ".json";

  std::ofstream bin(bin_path, std::ios::binary);
  if (!bin) throw std::runtime_error("cannot write " + bin_path.string());
  for (Eigen::Index i = 0; i < kernel.rows(); ++i) {
    for (Eigen::Index j = 0; j < kernel.cols(); ++j) {
      const double v = kernel.values(i, j);
      bin.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
  }
  if (!bin) throw std::runtime_error("write failed: " + bin_path.string());

  nlohmann::json side;
  side["periods"] = meta.periods;
  side["alpha"] = meta.alpha;
  side["arch_fingerprint"] = meta.arch_fingerprint;
  side["kernel_kind"] = meta.kernel_kind;
  side["matrix_kind"] = std::string(to_string(kernel.kind));
  side["rows"] = kernel.rows();
  side["cols"] = kernel.cols();
  side["row_labels"] = kernel.row_labels;
  side["col_labels"] = kernel.col_labels;
  side["encoding"] = "float64-le-row-major";
  std::ofstream js(json_path);
  if (!js) throw std::runtime_error("cannot write " + json_path.string());
  js << side.dump(2) << '\n';
}

KernelCacheEntry load_kernel_cache(const std::filesystem::path& stem) {
  auto bin_path = stem;
  bin_path += ".bin";
  auto json_path = stem;
  json_path += ".json";

  std::ifstream js(json_path);
  if (!js) throw std::runtime_error("cannot read " + json_path.string());
  const nlohmann::json side = nlohmann::json::parse(js);

  KernelCacheEntry entry;
  entry.meta.periods = side.at("periods").get<std::vector<std::string>>();
  entry.meta.alpha = side.at("alpha").get<double>();
  entry.meta.arch_fingerprint = side.at("arch_fingerprint").get<std::string>();
  entry.meta.kernel_kind = side.at("kernel_kind").get<std::string>();
  entry.meta.rows = side.at("rows").get<Eigen::Index>();
  entry.meta.cols = side.at("cols").get<Eigen::Index>();

  entry.kernel.kind = parse_kernel_matrix_kind(side.at("matrix_kind").get<std::string>());
  entry.kernel.row_labels = side.at("row_labels").get<std::vector<std::string>>();
  entry.kernel.col_labels = side.at("col_labels").get<std::vector<std::string>>();
  entry.kernel.values.resize(entry.meta.rows, entry.meta.cols);

  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw std::runtime_error("cannot read " + bin_path.string());
  for (Eigen::Index i = 0; i < entry.meta.rows; ++i) {
    for (Eigen::Index j = 0; j < entry.meta.cols; ++j) {
      double v = 0.0;
      bin.read(reinterpret_cast<char*>(&v), sizeof v);
      entry.kernel.values(i, j) = v;
    }
  }
  if (!bin) throw std::runtime_error("truncated kernel cache: " + bin_path.string());
  return entry;
}

}  // namespace widesdf
