#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "widesdf/backtest.hpp"

namespace widesdf {

inline constexpr int kConfigSchemaVersion = 1;

/// Parsed "key = value" configuration. Lines starting with '#' and blank
/// lines are ignored; `schema_version` is mandatory and must equal
/// kConfigSchemaVersion. Keys:
///
///   window           int >= 2                    (12)
///   ridge_grid       comma list of reals >= 0    (1e-5, ..., 1e3)
///   retrain_every    int >= 1                    (6)
///   alpha            real                        (0.5)
///   depths           comma list of ints          (1, 2, 4, ..., 128)
///   activations      comma list relu|erf         (relu)
///   sigma_w          real, every layer           (1)
///   sigma_b          real, every hidden layer    (0.05)
///   kernels          comma list ntk|nngp         (ntk)
///   weight_mode      ridge | gradient_flow       (ridge)
///   gf_eta, gf_s     reals                       (1, 1e6)
///   hac_lags         int >= 0, Newey-West lags   (0: classical errors)
///   workers          int >= 1                    (1)
///   memory_budget_mb int >= 1                    (256)
///
/// Unknown keys, duplicates and malformed values throw std::invalid_argument.
struct ConfigFile {
  int schema_version = kConfigSchemaVersion;
  std::map<std::string, std::string> entries;
};

ConfigFile parse_config(std::string_view text);
ConfigFile read_config(const std::filesystem::path& path);

/// Builds a backtest configuration; `input_dim` is the characteristic count
/// of the panel the architectures will see.
BacktestConfig to_backtest_config(const ConfigFile& file, int input_dim);

/// Inverse of parse_config for the keys set in `file`.
std::string render_config(const ConfigFile& file);

}  // namespace widesdf
