#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace widesdf {

/// One cross-section: characteristics observed at t and the excess returns
/// realized over t -> t+1.
struct PanelPeriod {
  std::string date;
  Eigen::MatrixXd X;       // N_t x d
  Eigen::VectorXd r_next;  // N_t
  std::vector<std::string> asset_ids;

  Eigen::Index size() const { return X.rows(); }
};

/// Ordered sequence of cross-sections sharing one characteristic set.
struct PanelDataset {
  std::vector<std::string> characteristic_names;
  std::vector<PanelPeriod> periods;

  std::size_t size() const { return periods.size(); }
  int num_characteristics() const { return static_cast<int>(characteristic_names.size()); }

  /// Throws std::out_of_range for an unknown date.
  std::size_t index_of(std::string_view date) const;
  std::vector<std::string> dates() const;

  /// Periods [first, first + count).
  PanelDataset slice(std::size_t first, std::size_t count) const;

  /// Shape and alignment checks; optionally that characteristics lie in
  /// [-0.5, 0.5]. Throws std::invalid_argument.
  void validate(bool require_unit_range = true) const;

  /// FNV-1a over the exact bytes of every field.
  std::string content_hash() const;
};

}  // namespace widesdf
