// widesdf command-line front end.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "widesdf/backtest.hpp"
#include "widesdf/config.hpp"
#include "widesdf/feature_learning.hpp"
#include "widesdf/finite_width.hpp"
#include "widesdf/ingest.hpp"
#include "widesdf/kernel_core.hpp"
#include "widesdf/report.hpp"
#include "widesdf/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace widesdf;

namespace {

constexpr const char* kCacheEnv = "WIDESDF_CACHE_DIR";

fs::path default_cache_dir() {
  if (const char* env = std::getenv(kCacheEnv); env && *env) return env;
  return ".widesdf-cache";
}

// Flags that mirror config-file keys; a set flag overrides the file.
struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> overrides;

  void add(CLI::App* app) {
    app->add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
    for (const char* key : {"window", "ridge_grid", "retrain_every", "alpha", "depths", "activations",
                            "sigma_w", "sigma_b", "kernels", "weight_mode", "gf_eta", "gf_s",
                            "hac_lags", "workers", "memory_budget_mb"}) {
      std::string flag = std::string("--") + key;
      for (auto& c : flag) {
        if (c == '_') c = '-';
      }
      app->add_option_function<std::string>(
          flag, [this, k = std::string(key)](const std::string& v) { overrides[k] = v; },
          std::string("overrides config key ") + key);
    }
  }

  BacktestConfig build(int input_dim) const {
    ConfigFile file;
    if (!config_path.empty()) file = read_config(config_path);
    for (const auto& [k, v] : overrides) file.entries[k] = v;
    // re-parse so overrides go through the same validation as the file
    return to_backtest_config(parse_config(render_config(file)), input_dim);
  }
};

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
  return out;
}

void print_json(const json& j) { std::cout << j.dump(2) << "\n"; }

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// Seed-averaged empirical NTK against the analytic recursion at random pairs.
json ntk_suite(Activation act, int depth, const std::vector<int>& widths, int seeds, int pairs,
               int dim, std::uint64_t seed) {
  const ArchitectureSpec arch = ArchitectureSpec::flat(depth, dim, act);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> inputs;
  for (int p = 0; p < pairs; ++p) {
    Eigen::VectorXd a(dim), b(dim);
    for (int i = 0; i < dim; ++i) a(i) = normal(rng);
    for (int i = 0; i < dim; ++i) b(i) = normal(rng);
    inputs.emplace_back(a, b);
  }
  json rows = json::array();
  for (int width : widths) {
    std::vector<double> errors;
    for (const auto& [a, b] : inputs) {
      double mean = 0.0;
      for (int s = 0; s < seeds; ++s) {
        const MlpParams params = init_mlp(arch, width, seed + static_cast<std::uint64_t>(s) + 1);
        mean += empirical_ntk(params, {a.data(), static_cast<std::size_t>(dim)},
                              {b.data(), static_cast<std::size_t>(dim)});
      }
      mean /= seeds;
      const double exact = ntk_recursion({a.data(), static_cast<std::size_t>(dim)},
                                         {b.data(), static_cast<std::size_t>(dim)}, arch)
                               .theta;
      errors.push_back(std::abs(mean - exact) / std::abs(exact));
    }
    std::vector<double> sorted = errors;
    std::sort(sorted.begin(), sorted.end());
    rows.push_back({{"width", width},
                    {"median_rel_error", sorted[sorted.size() / 2]},
                    {"max_rel_error", sorted.back()}});
  }
  return {{"suite", "ntk"}, {"activation", std::string(to_string(act))}, {"depth", depth},
          {"seeds", seeds}, {"rows", rows}};
}

json nngp_suite(Activation act, int depth, int width, int seeds, int batch, int dim,
                std::uint64_t seed, int workers) {
  const ArchitectureSpec arch = ArchitectureSpec::flat(depth, dim, act);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd X(batch, dim);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = normal(rng);
  const std::vector<int> widths(static_cast<std::size_t>(depth), width);
  const NngpReport r = nngp_distribution_test(arch, widths, seeds, X, seed + 1, workers);
  return {{"suite", "nngp"},
          {"activation", std::string(to_string(act))},
          {"depth", depth},
          {"width", width},
          {"seeds", seeds},
          {"max_relative_deviation", r.max_relative_deviation},
          {"mean_within_clt", r.mean_within_clt},
          {"jarque_bera", r.jarque_bera}};
}

json gradcheck_suite(Activation act, int depth, int width, int nets, int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  for (int n = 0; n < nets; ++n) {
    const ArchitectureSpec arch = ArchitectureSpec::flat(depth, dim, act);
    MlpParams params = init_mlp(arch, width, seed + static_cast<std::uint64_t>(n) + 1);
    Eigen::VectorXd x(dim);
    for (int i = 0; i < dim; ++i) x(i) = normal(rng);
    const std::span<const double> xs(x.data(), static_cast<std::size_t>(dim));
    const Eigen::VectorXd g = grad_theta(params, xs);
    Eigen::VectorXd fd(g.size());
    Eigen::Index k = 0;
    const double h = 1e-6;
    auto probe = [&](double& slot) {
      const double keep = slot;
      slot = keep + h;
      const double up = forward(params, xs).output;
      slot = keep - h;
      const double down = forward(params, xs).output;
      slot = keep;
      fd(k++) = (up - down) / (2.0 * h);
    };
    for (int l = 0; l <= depth; ++l) {
      auto& W = params.weights[static_cast<std::size_t>(l)];
      for (Eigen::Index r = 0; r < W.rows(); ++r) {
        for (Eigen::Index c = 0; c < W.cols(); ++c) probe(W(r, c));
      }
      if (l < depth) {
        auto& b = params.biases[static_cast<std::size_t>(l)];
        for (Eigen::Index r = 0; r < b.size(); ++r) probe(b(r));
      }
    }
    worst = std::max(worst, (g - fd).norm() / std::max(g.norm(), 1e-300));
  }
  return {{"suite", "gradcheck"}, {"activation", std::string(to_string(act))}, {"depth", depth},
          {"width", width}, {"nets", nets}, {"max_rel_error", worst}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"widesdf: infinite-width network kernels for SDF estimation"};
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Rank-standardize a raw characteristics CSV");
  std::string ingest_in, ingest_out, ingest_rejects;
  double max_missing = 1.0 / 3.0;
  ingest->add_option("input", ingest_in, "raw CSV: date,asset_id,ret_excess_next,chars...")
      ->required()
      ->check(CLI::ExistingFile);
  ingest->add_option("-o,--output", ingest_out, "standardized panel CSV")->required();
  ingest->add_option("--rejects", ingest_rejects, "write rejected rows here");
  ingest->add_option("--max-missing", max_missing, "drop rows with a larger missing share");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic panel with a planted payoff");
  SynthSpec sspec;
  std::string synth_out, payoff = "linear", active = "0,1";
  std::uint64_t synth_seed = 0;
  synth->add_option("-o,--output", synth_out, "panel CSV")->required();
  synth->add_option("--assets", sspec.num_assets);
  synth->add_option("--min-assets", sspec.min_assets, "draw N_t from [min, assets] when > 0");
  synth->add_option("--periods", sspec.num_periods);
  synth->add_option("--chars", sspec.num_characteristics);
  synth->add_option("--payoff", payoff)->check(CLI::IsMember({"linear", "sincos"}));
  synth->add_option("--active", active, "comma list of active characteristic indices");
  synth->add_option("--signal", sspec.signal);
  synth->add_option("--noise", sspec.noise);
  synth->add_flag("--constant", sspec.constant_returns, "every return equals --constant-value");
  synth->add_option("--constant-value", sspec.constant_value);
  synth->add_option("--start-year", sspec.start_year);
  synth->add_option("--seed", synth_seed);

  // kernel
  auto* kernel = app.add_subcommand("kernel", "Precompute in-sample kernels for every window");
  std::string kernel_panel, kernel_cache;
  ConfigFlags kernel_flags;
  kernel->add_option("panel", kernel_panel, "standardized panel CSV")->required()->check(CLI::ExistingFile);
  kernel->add_option("--cache-dir", kernel_cache, std::string("defaults to $") + kCacheEnv);
  kernel_flags.add(kernel);

  // backtest
  auto* backtest = app.add_subcommand("backtest", "Rolling out-of-sample kernel SDF backtest");
  std::string bt_panel, bt_out, bt_factors, bt_cache;
  bool bt_no_cache = false;
  ConfigFlags bt_flags;
  backtest->add_option("panel", bt_panel, "standardized panel CSV")->required()->check(CLI::ExistingFile);
  backtest->add_option("-o,--out", bt_out, "report directory")->required();
  backtest->add_option("--factors", bt_factors, "benchmark factor CSV: date,f1,...")
      ->check(CLI::ExistingFile);
  backtest->add_option("--cache-dir", bt_cache, std::string("defaults to $") + kCacheEnv);
  backtest->add_flag("--no-cache", bt_no_cache, "assemble every kernel, read and write no cache");
  bt_flags.add(backtest);

  // validate
  auto* validate = app.add_subcommand("validate", "Finite-width checks against the analytic kernels");
  std::string suite = "all", v_act = "relu", v_widths = "64,256,1024";
  int v_depth = 2, v_seeds = 20, v_pairs = 5, v_dim = 10, v_width = 512, v_batch = 6, v_workers = 1;
  std::uint64_t v_seed = 7;
  validate->add_option("--suite", suite)->check(CLI::IsMember({"ntk", "nngp", "gradcheck", "all"}));
  validate->add_option("--activation", v_act)->check(CLI::IsMember({"relu", "erf"}));
  validate->add_option("--depth", v_depth);
  validate->add_option("--widths", v_widths, "ntk suite widths");
  validate->add_option("--width", v_width, "nngp / gradcheck width");
  validate->add_option("--seeds", v_seeds);
  validate->add_option("--pairs", v_pairs);
  validate->add_option("--batch", v_batch);
  validate->add_option("--dim", v_dim);
  validate->add_option("--workers", v_workers);
  validate->add_option("--seed", v_seed);

  // featlearn
  auto* featlearn = app.add_subcommand("featlearn", "Alternate SDF fits and Mahalanobis metric updates");
  std::string fl_panel, fl_profile = "gaussian", fl_rule = "trace", fl_axes;
  double fl_z = 1e-3, fl_ell = 1.0;
  int fl_iters = 5;
  featlearn->add_option("panel", fl_panel, "standardized panel CSV")->required()->check(CLI::ExistingFile);
  featlearn->add_option("--z", fl_z, "ridge penalty");
  featlearn->add_option("--profile", fl_profile)->check(CLI::IsMember({"gaussian", "laplace"}));
  featlearn->add_option("--ell", fl_ell, "profile bandwidth");
  featlearn->add_option("--iters", fl_iters);
  featlearn->add_option("--rule", fl_rule)->check(CLI::IsMember({"trace", "sqrt"}));
  featlearn->add_option("--axes", fl_axes, "report the principal angle to these coordinates");

  // report
  auto* report = app.add_subcommand("report", "Print a saved backtest summary");
  std::string rep_path;
  report->add_option("summary", rep_path, "summary.json or report directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      IngestSchema schema;
      schema.max_missing_fraction = max_missing;
      const IngestResult r = ingest_csv(ingest_in, schema);
      write_panel_csv(ingest_out, r.panel);
      if (!ingest_rejects.empty()) write_rejects_csv(ingest_rejects, r.report.rejects);
      print_json({{"periods", r.panel.size()},
                  {"rows_read", r.report.rows_read},
                  {"rows_rejected", r.report.rejects.size()},
                  {"rows_dropped_missing", r.report.rows_dropped_missing},
                  {"values_imputed", r.report.values_imputed},
                  {"data_hash", r.panel.content_hash()}});
      if (!r.report.rejects.empty() && ingest_rejects.empty()) {
        std::cerr << r.report.rejects.size() << " rows rejected; pass --rejects to list them\n";
      }
    } else if (*synth) {
      sspec.payoff = parse_planted_payoff(payoff);
      sspec.active = parse_int_list(active);
      const PanelDataset panel = synth_panel(sspec, synth_seed);
      write_panel_csv(synth_out, panel);
      const json spec_json = {{"assets", sspec.num_assets}, {"min_assets", sspec.min_assets},
                              {"periods", sspec.num_periods}, {"chars", sspec.num_characteristics},
                              {"payoff", to_string(sspec.payoff)}, {"active", sspec.active},
                              {"signal", sspec.signal}, {"noise", sspec.noise},
                              {"constant", sspec.constant_returns},
                              {"constant_value", sspec.constant_value}, {"seed", synth_seed}};
      std::ofstream(synth_out + ".spec.json") << spec_json.dump(2) << "\n";
      const auto planted = planted_portfolio_returns(sspec, panel);
      const auto sr = panel.size() >= 2 ? sharpe(planted) : std::nullopt;
      print_json({{"output", synth_out}, {"generator", spec_json},
                  {"planted_sharpe", sr ? json(*sr) : json(nullptr)},
                  {"data_hash", panel.content_hash()}});
    } else if (*kernel) {
      const PanelDataset panel = read_panel_csv(kernel_panel);
      BacktestConfig cfg = kernel_flags.build(panel.num_characteristics());
      const fs::path dir = kernel_cache.empty() ? default_cache_dir() : fs::path(kernel_cache);
      std::size_t built = 0, reused = 0;
      const auto T = static_cast<std::size_t>(cfg.window_T);
      for (std::size_t m : formation_indices(panel.size(), cfg)) {
        const PanelDataset window = panel.slice(m - T, T);
        for (const auto& arch : cfg.architectures) {
          for (KernelType k : cfg.kernels) {
            bool assembled = false;
            window_kernel(window, arch, k, cfg.norm, cfg.memory_budget_bytes, dir, assembled);
            ++(assembled ? built : reused);
          }
        }
      }
      print_json({{"cache_dir", dir.string()}, {"assembled", built}, {"reused", reused}});
    } else if (*backtest) {
      const PanelDataset panel = read_panel_csv(bt_panel);
      BacktestConfig cfg = bt_flags.build(panel.num_characteristics());
      if (!bt_no_cache) cfg.cache_dir = bt_cache.empty() ? default_cache_dir() : fs::path(bt_cache);
      std::optional<FactorTable> factors;
      if (!bt_factors.empty()) factors = FactorTable::read_csv(bt_factors);
      const BacktestReport rep = rolling_backtest(panel, cfg, factors ? &*factors : nullptr);
      emit_report(rep, bt_out);
      print_json({{"out", bt_out}, {"cells", rep.cells.size()}, {"windows", rep.windows},
                  {"kernel_assemblies", rep.kernel_assemblies},
                  {"kernel_cache_hits", rep.kernel_cache_hits}, {"config_hash", rep.config_hash},
                  {"data_hash", rep.data_hash}});
    } else if (*validate) {
      const Activation act = parse_activation(v_act);
      json out = json::array();
      if (suite == "ntk" || suite == "all") {
        out.push_back(ntk_suite(act, v_depth, parse_int_list(v_widths), v_seeds, v_pairs, v_dim, v_seed));
      }
      if (suite == "nngp" || suite == "all") {
        out.push_back(nngp_suite(act, v_depth, v_width, std::max(v_seeds, 200), v_batch, v_dim,
                                 v_seed, v_workers));
      }
      if (suite == "gradcheck" || suite == "all") {
        out.push_back(gradcheck_suite(act, v_depth, std::min(v_width, 16), 10, v_dim, v_seed));
      }
      print_json(out);
    } else if (*featlearn) {
      const PanelDataset panel = read_panel_csv(fl_panel);
      const FeatureFit fit = alternate_fit(panel, fl_z, RadialProfile::parse(fl_profile, fl_ell),
                                           fl_iters, parse_metric_update(fl_rule));
      json iters = json::array();
      for (const auto& it : fit.iterations) {
        iters.push_back({{"iteration", it.iteration},
                         {"objective_before_solve", number_or_null(it.objective_before_solve)},
                         {"objective_after_solve", number_or_null(it.objective_after_solve)},
                         {"agop_trace", number_or_null(it.agop_trace)},
                         {"metric_eigenvalues", it.metric_eigenvalues}});
      }
      json out = {{"iterations", iters}, {"degenerate", fit.degenerate}, {"message", fit.message}};
      std::vector<std::vector<double>> M;
      for (Eigen::Index r = 0; r < fit.metric.dim(); ++r) {
        M.emplace_back();
        for (Eigen::Index c = 0; c < fit.metric.dim(); ++c) M.back().push_back(fit.metric.matrix()(r, c));
      }
      out["metric"] = M;
      if (!fl_axes.empty()) {
        const double angle = principal_angle_to_axes(fit.metric.matrix(), parse_int_list(fl_axes));
        out["principal_angle_deg"] = angle * 180.0 / std::acos(-1.0);
      }
      print_json(out);
    } else if (*report) {
      fs::path p = rep_path;
      if (fs::is_directory(p)) p /= "summary.json";
      const ReportSummary s = read_summary_json(p);
      std::printf("config %s  data %s  windows %zu  kernel assemblies %zu\n", s.config_hash.c_str(),
                  s.data_hash.c_str(), s.windows, s.kernel_assemblies);
      std::printf("%-44s %8s %12s %12s %10s\n", "cell", "months", "mean", "sharpe", "alpha t");
      for (const auto& c : s.cells) {
        const std::string sr = c.sharpe ? format_double(*c.sharpe).substr(0, 10) : "n/a";
        const std::string t = c.alpha_t_stat ? format_double(*c.alpha_t_stat).substr(0, 8) : "n/a";
        std::printf("%-44s %8d %12.5g %12s %10s\n", c.label.c_str(), c.num_months, c.mean,
                    sr.c_str(), t.c_str());
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
