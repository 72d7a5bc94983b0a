#include "widesdf/report.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "widesdf/ingest.hpp"

namespace widesdf {

namespace {

using nlohmann::json;

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_optional(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

std::string field(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

ReportSummary summarize(const BacktestReport& report) {
  ReportSummary s;
  s.config_hash = report.config_hash;
  s.data_hash = report.data_hash;
  s.windows = report.windows;
  s.kernel_assemblies = report.kernel_assemblies;
  s.factor_names = report.factor_names;
  for (const auto& cell : report.cells) {
    CellSummary c;
    c.label = cell.label();
    c.arch_fingerprint = cell.arch.fingerprint();
    c.depth = cell.arch.depth;
    c.activation = std::string(to_string(cell.arch.activation));
    c.kernel = std::string(to_string(cell.kernel));
    if (const auto* r = std::get_if<RidgeMode>(&cell.mode)) {
      c.mode = "ridge";
      c.z = r->z;
    } else {
      const auto& g = std::get<GradientFlowMode>(cell.mode);
      c.mode = "gradient_flow";
      c.eta = g.eta;
      c.s = g.s;
    }
    c.num_months = static_cast<int>(cell.returns.size());
    double total = 0.0;
    for (double r : cell.returns) total += r;
    c.mean = cell.returns.empty() ? 0.0 : total / static_cast<double>(cell.returns.size());
    c.sharpe = cell.sharpe;
    if (cell.alpha) {
      c.alpha = cell.alpha->alpha;
      c.alpha_t_stat = cell.alpha->t_stat;
      c.betas.assign(cell.alpha->betas.data(), cell.alpha->betas.data() + cell.alpha->betas.size());
    }
    c.alpha_error = cell.alpha_error;
    s.cells.push_back(std::move(c));
  }
  return s;
}

std::string summary_json(const ReportSummary& summary) {
  json j;
  j["config_hash"] = summary.config_hash;
  j["data_hash"] = summary.data_hash;
  j["windows"] = summary.windows;
  j["kernel_assemblies"] = summary.kernel_assemblies;
  j["factor_names"] = summary.factor_names;
  j["cells"] = json::array();
  for (const auto& c : summary.cells) {
    json cj;
    cj["label"] = c.label;
    cj["arch_fingerprint"] = c.arch_fingerprint;
    cj["depth"] = c.depth;
    cj["activation"] = c.activation;
    cj["kernel"] = c.kernel;
    cj["mode"] = c.mode;
    cj["z"] = c.z;
    cj["eta"] = c.eta;
    cj["s"] = c.s;
    cj["num_months"] = c.num_months;
    cj["mean"] = c.mean;
    cj["sharpe"] = optional_number(c.sharpe);
    cj["alpha"] = optional_number(c.alpha);
    // t may be infinite on an exact fit; JSON has no infinity
    cj["alpha_t_stat"] = c.alpha_t_stat && std::isfinite(*c.alpha_t_stat)
                             ? json(*c.alpha_t_stat)
                             : (c.alpha_t_stat ? json(format_double(*c.alpha_t_stat)) : json(nullptr));
    cj["betas"] = c.betas;
    cj["alpha_error"] = c.alpha_error;
    j["cells"].push_back(std::move(cj));
  }
  return j.dump(2) + "\n";
}

ReportSummary parse_summary_json(const std::string& text) {
  const json j = json::parse(text);
  ReportSummary s;
  s.config_hash = j.at("config_hash").get<std::string>();
  s.data_hash = j.at("data_hash").get<std::string>();
  s.windows = j.at("windows").get<std::size_t>();
  s.kernel_assemblies = j.at("kernel_assemblies").get<std::size_t>();
  s.factor_names = j.at("factor_names").get<std::vector<std::string>>();
  for (const auto& cj : j.at("cells")) {
    CellSummary c;
    c.label = cj.at("label").get<std::string>();
    c.arch_fingerprint = cj.at("arch_fingerprint").get<std::string>();
    c.depth = cj.at("depth").get<int>();
    c.activation = cj.at("activation").get<std::string>();
    c.kernel = cj.at("kernel").get<std::string>();
    c.mode = cj.at("mode").get<std::string>();
    c.z = cj.at("z").get<double>();
    c.eta = cj.at("eta").get<double>();
    c.s = cj.at("s").get<double>();
    c.num_months = cj.at("num_months").get<int>();
    c.mean = cj.at("mean").get<double>();
    c.sharpe = read_optional(cj.at("sharpe"));
    c.alpha = read_optional(cj.at("alpha"));
    const json& t = cj.at("alpha_t_stat");
    if (t.is_string()) c.alpha_t_stat = std::stod(t.get<std::string>());
    else c.alpha_t_stat = read_optional(t);
    c.betas = cj.at("betas").get<std::vector<double>>();
    c.alpha_error = cj.at("alpha_error").get<std::string>();
    s.cells.push_back(std::move(c));
  }
  return s;
}

ReportSummary read_summary_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_summary_json(buf.str());
}

void emit_report(const BacktestReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
  const ReportSummary summary = summarize(report);

  const auto series_path = dir / "series.csv";
  std::ofstream series = open_out(series_path);
  series << "date,cell,depth,activation,kernel,mode,z,eta,s,return\n";
  for (std::size_t i = 0; i < report.cells.size(); ++i) {
    const auto& cell = report.cells[i];
    const auto& c = summary.cells[i];
    for (std::size_t t = 0; t < cell.returns.size(); ++t) {
      series << cell.dates[t] << ',' << c.label << ',' << c.depth << ',' << c.activation << ','
             << c.kernel << ',' << c.mode << ',' << format_double(c.z) << ','
             << format_double(c.eta) << ',' << format_double(c.s) << ','
             << format_double(cell.returns[t]) << '\n';
    }
  }
  finish(series, series_path);

  const auto plot_path = dir / "depth_plot.csv";
  std::ofstream plot = open_out(plot_path);
  plot << "kernel,mode,z,eta,s,activation,depth,sharpe,alpha,alpha_t_stat\n";
  for (const auto& c : summary.cells) {
    plot << c.kernel << ',' << c.mode << ',' << format_double(c.z) << ',' << format_double(c.eta)
         << ',' << format_double(c.s) << ',' << c.activation << ',' << c.depth << ','
         << field(c.sharpe) << ',' << field(c.alpha) << ',' << field(c.alpha_t_stat) << '\n';
  }
  finish(plot, plot_path);

  const auto summary_path = dir / "summary.json";
  std::ofstream js = open_out(summary_path);
  js << summary_json(summary);
  finish(js, summary_path);
}

}  // namespace widesdf
