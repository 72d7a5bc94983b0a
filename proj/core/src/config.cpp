#include "widesdf/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "widesdf/ingest.hpp"

namespace widesdf {

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "window", "ridge_grid", "retrain_every", "alpha", "depths", "activations", "sigma_w",
      "sigma_b", "kernels", "weight_mode", "gf_eta", "gf_s", "hac_lags", "workers",
      "memory_budget_mb"};
  return keys;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw std::invalid_argument("config: empty list item in '" + value + "'");
    out.push_back(item);
  }
  if (out.empty()) throw std::invalid_argument("config: empty list");
  return out;
}

double to_real(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || !std::isfinite(v)) {
    throw std::invalid_argument("config: " + key + " expects a number, got '" + text + "'");
  }
  return v;
}

long to_int(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty()) {
    throw std::invalid_argument("config: " + key + " expects an integer, got '" + text + "'");
  }
  return v;
}

}  // namespace

ConfigFile parse_config(std::string_view text) {
  ConfigFile file;
  bool have_version = false;
  std::stringstream ss{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key == "schema_version") {
      if (have_version) throw std::invalid_argument("config: duplicate schema_version");
      file.schema_version = static_cast<int>(to_int(key, value));
      have_version = true;
      continue;
    }
    if (!known_keys().contains(key)) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    if (!file.entries.emplace(key, value).second) {
      throw std::invalid_argument("config: duplicate key '" + key + "'");
    }
  }
  if (!have_version) throw std::invalid_argument("config: missing schema_version");
  if (file.schema_version != kConfigSchemaVersion) {
    throw std::invalid_argument("config: unsupported schema_version " +
                                std::to_string(file.schema_version));
  }
  return file;
}

ConfigFile read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

BacktestConfig to_backtest_config(const ConfigFile& file, int input_dim) {
  auto get = [&file](const std::string& key) -> const std::string* {
    const auto it = file.entries.find(key);
    return it == file.entries.end() ? nullptr : &it->second;
  };
  BacktestConfig c;
  if (const auto* v = get("window")) c.window_T = static_cast<int>(to_int("window", *v));
  if (const auto* v = get("ridge_grid")) {
    c.ridge_grid.clear();
    for (const auto& item : split_list(*v)) c.ridge_grid.push_back(to_real("ridge_grid", item));
  }
  if (const auto* v = get("retrain_every")) c.retrain_every = static_cast<int>(to_int("retrain_every", *v));
  if (const auto* v = get("alpha")) c.norm.alpha = to_real("alpha", *v);

  std::vector<int> depths = default_depth_grid();
  if (const auto* v = get("depths")) {
    depths.clear();
    for (const auto& item : split_list(*v)) depths.push_back(static_cast<int>(to_int("depths", item)));
  }
  std::vector<Activation> activations = {Activation::ReLU};
  if (const auto* v = get("activations")) {
    activations.clear();
    for (const auto& item : split_list(*v)) activations.push_back(parse_activation(item));
  }
  const double sw = get("sigma_w") ? to_real("sigma_w", *get("sigma_w")) : 1.0;
  const double sb = get("sigma_b") ? to_real("sigma_b", *get("sigma_b")) : 0.05;
  for (Activation act : activations) {
    for (int depth : depths) c.architectures.push_back(ArchitectureSpec::uniform(depth, input_dim, act, sw, sb));
  }
  if (const auto* v = get("kernels")) {
    c.kernels.clear();
    for (const auto& item : split_list(*v)) c.kernels.push_back(parse_kernel_type(item));
  }
  const std::string mode = get("weight_mode") ? *get("weight_mode") : "ridge";
  if (mode == "ridge") {
    c.weight_mode = RidgeMode{};
  } else if (mode == "gradient_flow") {
    GradientFlowMode g{1.0, 1e6};
    if (const auto* v = get("gf_eta")) g.eta = to_real("gf_eta", *v);
    if (const auto* v = get("gf_s")) g.s = to_real("gf_s", *v);
    c.weight_mode = g;
  } else {
    throw std::invalid_argument("config: weight_mode must be ridge or gradient_flow");
  }
  if (const auto* v = get("hac_lags")) c.hac_lags = static_cast<int>(to_int("hac_lags", *v));
  if (const auto* v = get("workers")) c.workers = static_cast<int>(to_int("workers", *v));
  if (const auto* v = get("memory_budget_mb")) {
    const long mb = to_int("memory_budget_mb", *v);
    if (mb < 1) throw std::invalid_argument("config: memory_budget_mb must be >= 1");
    c.memory_budget_bytes = static_cast<std::size_t>(mb) << 20;
  }
  c.validate();
  return c;
}

std::string render_config(const ConfigFile& file) {
  std::string out = "schema_version = " + std::to_string(file.schema_version) + "\n";
  for (const auto& [k, v] : file.entries) out += k + " = " + v + "\n";
  return out;
}

}  // namespace widesdf
