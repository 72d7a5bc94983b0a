#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "widesdf/panel.hpp"

namespace widesdf {

enum class PlantedPayoff {
  Linear,  // pi*(x) = sum_k x_k over the active set
  SinCos,  // sin(2 pi x_k) and cos(2 pi x_k) alternating over the active set
};

std::string to_string(PlantedPayoff p);
PlantedPayoff parse_planted_payoff(std::string_view name);

/// Generator parameters. Returns are
///   R_{i,t+1} = signal * pi*(x_i) + noise * eps_i,   eps ~ N(0, 1),
/// or R == constant_value when constant_returns is set.
struct SynthSpec {
  int num_assets = 100;     // N (upper bound when min_assets > 0)
  int min_assets = 0;       // > 0 draws N_t uniformly from [min_assets, num_assets]
  int num_periods = 120;    // T
  int num_characteristics = 10;
  PlantedPayoff payoff = PlantedPayoff::Linear;
  std::vector<int> active = {0, 1};
  double signal = 0.05;
  double noise = 0.1;
  bool constant_returns = false;
  double constant_value = 0.01;
  int start_year = 1990;
  int start_month = 1;

  /// Throws std::invalid_argument on inconsistent parameters.
  void validate() const;
};

/// Planted weight function evaluated at one standardized characteristic row.
double planted_weight(const SynthSpec& spec, std::span<const double> x);

/// Characteristics are i.i.d. N(0, 1) and then rank-standardized within each
/// period, so they lie on an evenly spaced grid in [-0.5, 0.5]. Dates are
/// consecutive months "YYYY-MM". Byte-identical for a fixed seed.
PanelDataset synth_panel(const SynthSpec& spec, std::uint64_t seed);

/// Per-period return of the planted portfolio sum_i pi*(x_i) R_i.
Eigen::VectorXd planted_portfolio_returns(const SynthSpec& spec, const PanelDataset& panel);

}  // namespace widesdf
