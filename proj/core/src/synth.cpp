#include "widesdf/synth.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <stdexcept>

#include "widesdf/ingest.hpp"

namespace widesdf {

std::string to_string(PlantedPayoff p) {
  return p == PlantedPayoff::Linear ? "linear" : "sincos";
}

PlantedPayoff parse_planted_payoff(std::string_view name) {
  if (name == "linear") return PlantedPayoff::Linear;
  if (name == "sincos") return PlantedPayoff::SinCos;
  throw std::invalid_argument("unknown planted payoff: " + std::string(name));
}

void SynthSpec::validate() const {
  if (num_assets < 2) throw std::invalid_argument("synth: need at least 2 assets");
  if (min_assets < 0 || min_assets > num_assets) throw std::invalid_argument("synth: bad min_assets");
  if (min_assets > 0 && min_assets < 2) throw std::invalid_argument("synth: min_assets must be >= 2");
  if (num_periods < 1) throw std::invalid_argument("synth: need at least 1 period");
  if (num_characteristics < 1) throw std::invalid_argument("synth: need at least 1 characteristic");
  for (int k : active) {
    if (k < 0 || k >= num_characteristics) throw std::invalid_argument("synth: active index out of range");
  }
  if (!(noise >= 0.0) || !std::isfinite(signal)) throw std::invalid_argument("synth: bad scales");
  if (start_month < 1 || start_month > 12) throw std::invalid_argument("synth: bad start month");
}

double planted_weight(const SynthSpec& spec, std::span<const double> x) {
  double w = 0.0;
  for (std::size_t j = 0; j < spec.active.size(); ++j) {
    const double v = x[static_cast<std::size_t>(spec.active[j])];
    if (spec.payoff == PlantedPayoff::Linear) {
      w += v;
    } else {
      const double angle = 2.0 * std::numbers::pi * v;
      w += (j % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return w;
}

PanelDataset synth_panel(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::Index d = spec.num_characteristics;

  PanelDataset panel;
  for (Eigen::Index k = 0; k < d; ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "c%02d", static_cast<int>(k));
    panel.characteristic_names.emplace_back(name);
  }

  for (int t = 0; t < spec.num_periods; ++t) {
    int n = spec.num_assets;
    if (spec.min_assets > 0) {
      n = std::uniform_int_distribution<int>(spec.min_assets, spec.num_assets)(rng);
    }
    PanelPeriod p;
    const int month0 = spec.start_month - 1 + t;
    char date[16];
    std::snprintf(date, sizeof date, "%04d-%02d", spec.start_year + month0 / 12, month0 % 12 + 1);
    p.date = date;
    p.X.resize(n, d);
    for (Eigen::Index k = 0; k < d; ++k) {
      std::vector<double> raw(static_cast<std::size_t>(n));
      for (auto& v : raw) v = normal(rng);
      const std::vector<double> ranked = rank_standardize(raw);
      for (int i = 0; i < n; ++i) p.X(i, k) = ranked[static_cast<std::size_t>(i)];
    }
    p.r_next.resize(n);
    for (int i = 0; i < n; ++i) {
      const double eps = normal(rng);
      if (spec.constant_returns) {
        p.r_next(i) = spec.constant_value;
        continue;
      }
      const Eigen::VectorXd row = p.X.row(i).transpose();
      p.r_next(i) = spec.signal * planted_weight(spec, {row.data(), static_cast<std::size_t>(d)}) +
                    spec.noise * eps;
    }
    for (int i = 0; i < n; ++i) {
      char id[16];
      std::snprintf(id, sizeof id, "A%05d", i);
      p.asset_ids.emplace_back(id);
    }
    panel.periods.push_back(std::move(p));
  }
  return panel;
}

Eigen::VectorXd planted_portfolio_returns(const SynthSpec& spec, const PanelDataset& panel) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(panel.size()));
  for (std::size_t t = 0; t < panel.size(); ++t) {
    const auto& p = panel.periods[t];
    double acc = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const Eigen::VectorXd row = p.X.row(i).transpose();
      acc += planted_weight(spec, {row.data(), static_cast<std::size_t>(row.size())}) * p.r_next(i);
    }
    out(static_cast<Eigen::Index>(t)) = acc;
  }
  return out;
}

}  // namespace widesdf
