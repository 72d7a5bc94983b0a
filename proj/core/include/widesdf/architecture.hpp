#pragma once

#include <cstdint>
#include <string_view>
#include <string>
#include <vector>

#include "widesdf/activation.hpp"

namespace widesdf {

/// Pins an infinite-width MLP kernel: depth, per-layer initialization scales
/// and activation.
///
/// Layer l = 0 maps the input to the first hidden layer; layer L is the
/// scalar output layer, which carries no bias. Hence `sigma_w` has L + 1
/// entries and `sigma_b` has L entries.
struct ArchitectureSpec {
  int depth = 1;
  std::vector<double> sigma_w{1.0, 1.0};
  std::vector<double> sigma_b{0.05};
  Activation activation = Activation::ReLU;
  int input_dim = 1;

  /// sigma_w = 1, sigma_b = 0.05 at every layer.
  static ArchitectureSpec flat(int depth, int input_dim, Activation activation);

  /// Uniform scales at every layer.
  static ArchitectureSpec uniform(int depth, int input_dim, Activation activation,
                                  double sigma_w, double sigma_b);

  /// Throws std::invalid_argument when list lengths or scales are invalid.
  void validate() const;

  /// Stable text identifier, used in cache sidecars and reports.
  std::string fingerprint() const;

  bool operator==(const ArchitectureSpec&) const = default;
};

/// 64-bit FNV-1a, rendered as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);
std::uint64_t fnv1a(std::string_view bytes);

}  // namespace widesdf
