#include "widesdf/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "widesdf/ingest.hpp"

namespace widesdf {

namespace {

std::string mode_text(const WeightMode& mode) {
  if (const auto* r = std::get_if<RidgeMode>(&mode)) return "ridge(z=" + format_double(r->z) + ")";
  const auto& g = std::get<GradientFlowMode>(mode);
  return "gradient_flow(eta=" + format_double(g.eta) + ",s=" + format_double(g.s) + ")";
}

// Weight modes of one (arch, kernel) cell group, in report order.
std::vector<WeightMode> cell_modes(const BacktestConfig& config) {
  if (std::holds_alternative<GradientFlowMode>(config.weight_mode)) return {config.weight_mode};
  std::vector<WeightMode> modes;
  for (double z : config.ridge_grid) modes.emplace_back(RidgeMode{z});
  return modes;
}

struct JobOutput {
  std::vector<Eigen::VectorXd> weights;           // per mode
  std::vector<std::vector<double>> returns;       // per mode, per OOS month
  bool assembled = false;
};

JobOutput run_job(const PanelDataset& panel, const BacktestConfig& config, std::size_t m,
                  const ArchitectureSpec& arch, KernelType which,
                  const std::vector<WeightMode>& modes) {
  const auto T = static_cast<std::size_t>(config.window_T);
  const PanelDataset window = panel.slice(m - T, T);
  JobOutput out;
  const KernelMatrix K = window_kernel(window, arch, which, config.norm, config.memory_budget_bytes,
                                       config.cache_dir, out.assembled);
  const SpectralSolver solver(K);
  for (const auto& mode : modes) {
    if (const auto* r = std::get_if<RidgeMode>(&mode)) {
      const double per_period = pooled_to_per_period_penalty(r->z, K.rows());
      out.weights.push_back(solver.ridge(per_period).xi);
    } else {
      out.weights.push_back(solver.solve(mode).xi);
    }
  }
  out.returns.assign(modes.size(), {});
  const std::size_t end = std::min(m + static_cast<std::size_t>(config.retrain_every), panel.size());
  const BlockKernel block = make_block_kernel(arch, which);
  for (std::size_t t = m; t < end; ++t) {
    const auto& p = panel.periods[t];
    const Eigen::VectorXd row = cross_kernel_row(p.r_next, p.X, window, block, config.norm);
    for (std::size_t k = 0; k < modes.size(); ++k) out.returns[k].push_back(row.dot(out.weights[k]));
  }
  return out;
}

void attach_alpha(CellResult& cell, const FactorTable& factors, int hac_lags) {
  std::map<std::string, Eigen::Index> row_of;
  for (std::size_t i = 0; i < factors.dates.size(); ++i) {
    row_of.emplace(factors.dates[i], static_cast<Eigen::Index>(i));
  }
  std::vector<Eigen::Index> rows;
  std::vector<double> y;
  for (std::size_t i = 0; i < cell.dates.size(); ++i) {
    const auto it = row_of.find(cell.dates[i]);
    if (it == row_of.end()) continue;
    rows.push_back(it->second);
    y.push_back(cell.returns[i]);
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto k = factors.values.cols();
  if (n <= k + 1) {
    cell.alpha_error = "only " + std::to_string(n) + " out-of-sample months match factor dates";
    return;
  }
  Eigen::MatrixXd F(n, k);
  for (Eigen::Index i = 0; i < n; ++i) F.row(i) = factors.values.row(rows[static_cast<std::size_t>(i)]);
  try {
    cell.alpha = alpha_regression(Eigen::Map<const Eigen::VectorXd>(y.data(), n), F, hac_lags);
  } catch (const RankDeficientError& e) {
    cell.alpha_error = e.what();
  } catch (const std::invalid_argument& e) {
    cell.alpha_error = e.what();
  }
}

}  // namespace

std::vector<double> default_ridge_grid() {
  std::vector<double> grid;
  for (int e = -5; e <= 3; ++e) grid.push_back(std::pow(10.0, e));
  return grid;
}

std::vector<int> default_depth_grid() { return {1, 2, 4, 8, 16, 32, 64, 128}; }

void BacktestConfig::validate() const {
  if (window_T < 2) throw std::invalid_argument("backtest: window_T must be >= 2");
  if (ridge_grid.empty()) throw std::invalid_argument("backtest: ridge grid is empty");
  for (double z : ridge_grid) {
    if (!(z >= 0.0) || !std::isfinite(z)) throw std::invalid_argument("backtest: ridge penalties must be >= 0");
  }
  if (retrain_every < 1) throw std::invalid_argument("backtest: retrain_every must be >= 1");
  if (!(norm.alpha >= 0.0 && norm.alpha <= 1.0)) throw std::invalid_argument("backtest: alpha must lie in [0, 1]");
  if (architectures.empty()) throw std::invalid_argument("backtest: no architectures");
  for (const auto& a : architectures) a.validate();
  if (kernels.empty()) throw std::invalid_argument("backtest: no kernels");
  if (const auto* g = std::get_if<GradientFlowMode>(&weight_mode)) {
    if (!(g->eta > 0.0) || !(g->s >= 0.0)) throw std::invalid_argument("backtest: bad gradient flow");
  }
  if (hac_lags < 0) throw std::invalid_argument("backtest: hac_lags must be >= 0");
  if (workers < 1) throw std::invalid_argument("backtest: workers must be >= 1");
}

std::string BacktestConfig::canonical_text() const {
  std::string s = "window_T=" + std::to_string(window_T) + "\nridge_grid=";
  for (double z : ridge_grid) s += format_double(z) + ",";
  s += "\nretrain_every=" + std::to_string(retrain_every);
  s += "\nalpha=" + format_double(norm.alpha);
  for (const auto& a : architectures) s += "\narch=" + a.fingerprint();
  s += "\nkernels=";
  for (auto k : kernels) s += std::string(to_string(k)) + ",";
  s += "\nweight_mode=" + mode_text(weight_mode);
  s += "\nhac_lags=" + std::to_string(hac_lags) + "\n";
  return s;
}

std::string BacktestConfig::fingerprint() const { return fnv1a_hex(canonical_text()); }

FactorTable FactorTable::read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty factor file " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  FactorTable table;
  std::vector<std::string> header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "date") {
    throw std::runtime_error(path.string() + ": header must be date followed by factor columns");
  }
  table.names.assign(header.begin() + 1, header.end());
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != header.size()) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": field count");
    }
    std::vector<double> values;
    for (std::size_t k = 1; k < f.size(); ++k) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(f[k], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != f[k].size() || !std::isfinite(v)) {
        throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                 ": unparsable factor value '" + f[k] + "'");
      }
      values.push_back(v);
    }
    table.dates.push_back(f[0]);
    rows.push_back(std::move(values));
  }
  table.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(table.names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < rows[i].size(); ++k) {
      table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
  }
  return table;
}

std::string CellResult::label() const {
  return "L" + std::to_string(arch.depth) + "_" + std::string(to_string(arch.activation)) + "_" +
         std::string(to_string(kernel)) + "_" + mode_text(mode);
}

std::vector<std::size_t> formation_indices(std::size_t num_periods, const BacktestConfig& config) {
  std::vector<std::size_t> out;
  for (auto m = static_cast<std::size_t>(config.window_T); m < num_periods;
       m += static_cast<std::size_t>(config.retrain_every)) {
    out.push_back(m);
  }
  return out;
}

std::filesystem::path kernel_cache_stem(const std::filesystem::path& dir, const PanelDataset& window,
                                        const ArchitectureSpec& arch, KernelType which,
                                        const Normalization& norm) {
  const std::string key = arch.fingerprint() + "|" + std::string(to_string(which)) + "|" +
                          format_double(norm.alpha) + "|" + window.content_hash();
  const std::string first = window.periods.empty() ? "empty" : window.periods.front().date;
  return dir / ("ptk_" + first + "_" + std::to_string(window.size()) + "_" + fnv1a_hex(key));
}

KernelMatrix window_kernel(const PanelDataset& window, const ArchitectureSpec& arch, KernelType which,
                           const Normalization& norm, std::size_t memory_budget_bytes,
                           const std::optional<std::filesystem::path>& cache_dir, bool& assembled) {
  KernelCacheMeta meta{window.dates(), norm.alpha, arch.fingerprint(), std::string(to_string(which)),
                       static_cast<Eigen::Index>(window.size()),
                       static_cast<Eigen::Index>(window.size())};
  std::filesystem::path stem;
  if (cache_dir) {
    stem = kernel_cache_stem(*cache_dir, window, arch, which, norm);
    std::filesystem::path bin = stem;
    bin += ".bin";
    if (std::filesystem::exists(bin)) {
      try {
        KernelCacheEntry entry = load_kernel_cache(stem);
        if (entry.meta == meta) {
          assembled = false;
          return std::move(entry.kernel);
        }
      } catch (const std::exception&) {
        // unreadable or stale entry: rebuild below
      }
    }
  }
  const ChunkPlan plan = ChunkPlan::for_panel(window, memory_budget_bytes);
  KernelMatrix K = assemble_is_kernel(window, arch, which, norm, plan, 1);
  assembled = true;
  if (cache_dir) {
    std::filesystem::create_directories(*cache_dir);
    save_kernel_cache(stem, K, meta);
  }
  return K;
}

BacktestReport rolling_backtest(const PanelDataset& panel, const BacktestConfig& config,
                                const FactorTable* factors) {
  config.validate();
  panel.validate();
  const auto T = static_cast<std::size_t>(config.window_T);
  if (panel.size() < T + 2) {
    throw std::invalid_argument("backtest: window of " + std::to_string(T) +
                                " months needs at least " + std::to_string(T + 2) +
                                " periods, panel has " + std::to_string(panel.size()));
  }
  for (const auto& a : config.architectures) {
    if (a.input_dim != panel.num_characteristics()) {
      throw std::invalid_argument("backtest: architecture input_dim differs from characteristic count");
    }
  }

  const std::vector<std::size_t> formations = formation_indices(panel.size(), config);
  const std::vector<WeightMode> modes = cell_modes(config);
  const std::size_t n_arch = config.architectures.size();
  const std::size_t n_kern = config.kernels.size();
  const std::size_t n_jobs = formations.size() * n_arch * n_kern;

  std::vector<JobOutput> outputs(n_jobs);
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&]() {
    for (std::size_t j = next++; j < n_jobs; j = next++) {
      const std::size_t f = j / (n_arch * n_kern);
      const std::size_t a = (j / n_kern) % n_arch;
      const std::size_t k = j % n_kern;
      try {
        outputs[j] = run_job(panel, config, formations[f], config.architectures[a],
                             config.kernels[k], modes);
      } catch (...) {
        const std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(config.workers, static_cast<int>(n_jobs)));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);

  BacktestReport report;
  report.config_hash = config.fingerprint();
  report.data_hash = panel.content_hash();
  report.windows = formations.size();
  if (factors) report.factor_names = factors->names;
  for (const auto& o : outputs) {
    if (o.assembled) ++report.kernel_assemblies;
    else ++report.kernel_cache_hits;
  }

  for (std::size_t a = 0; a < n_arch; ++a) {
    for (std::size_t k = 0; k < n_kern; ++k) {
      for (std::size_t mi = 0; mi < modes.size(); ++mi) {
        CellResult cell;
        cell.arch_index = a;
        cell.arch = config.architectures[a];
        cell.kernel = config.kernels[k];
        cell.mode = modes[mi];
        for (std::size_t f = 0; f < formations.size(); ++f) {
          const JobOutput& o = outputs[(f * n_arch + a) * n_kern + k];
          cell.formation_dates.push_back(panel.periods[formations[f]].date);
          cell.weights.push_back(o.weights[mi]);
          for (std::size_t i = 0; i < o.returns[mi].size(); ++i) {
            cell.dates.push_back(panel.periods[formations[f] + i].date);
            cell.returns.push_back(o.returns[mi][i]);
          }
        }
        cell.sharpe = sharpe(cell.returns);
        if (factors) attach_alpha(cell, *factors, config.hac_lags);
        report.cells.push_back(std::move(cell));
      }
    }
  }
  return report;
}

}  // namespace widesdf
