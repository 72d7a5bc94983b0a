#include "widesdf/architecture.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace widesdf {

ArchitectureSpec ArchitectureSpec::flat(int depth, int input_dim, Activation activation) {
  return uniform(depth, input_dim, activation, 1.0, 0.05);
}

ArchitectureSpec ArchitectureSpec::uniform(int depth, int input_dim, Activation activation,
                                           double sigma_w, double sigma_b) {
  ArchitectureSpec arch;
  arch.depth = depth;
  arch.input_dim = input_dim;
  arch.activation = activation;
  arch.sigma_w.assign(static_cast<std::size_t>(std::max(depth, 0)) + 1, sigma_w);
  arch.sigma_b.assign(static_cast<std::size_t>(std::max(depth, 0)), sigma_b);
  arch.validate();
  return arch;
}

void ArchitectureSpec::validate() const {
  if (depth < 1) throw std::invalid_argument("architecture: depth must be >= 1");
  if (input_dim < 1) throw std::invalid_argument("architecture: input_dim must be >= 1");
  if (sigma_w.size() != static_cast<std::size_t>(depth) + 1) {
    throw std::invalid_argument("architecture: sigma_w needs depth + 1 entries");
  }
  if (sigma_b.size() != static_cast<std::size_t>(depth)) {
    throw std::invalid_argument("architecture: sigma_b needs depth entries");
  }
  for (double s : sigma_w) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw std::invalid_argument("architecture: sigma_w entries must be positive");
    }
  }
  for (double s : sigma_b) {
    if (!(s >= 0.0) || !std::isfinite(s)) {
      throw std::invalid_argument("architecture: sigma_b entries must be nonnegative");
    }
  }
}

std::string ArchitectureSpec::fingerprint() const {
  std::ostringstream out;
  out << "mlp;L=" << depth << ";n0=" << input_dim << ";act=" << to_string(activation) << ";w=";
  char buf[32];
  for (double s : sigma_w) {
    std::snprintf(buf, sizeof buf, "%.17g,", s);
    out << buf;
  }
  out << ";b=";
  for (double s : sigma_b) {
    std::snprintf(buf, sizeof buf, "%.17g,", s);
    out << buf;
  }
  return out.str();
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string fnv1a_hex(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(bytes)));
  return buf;
}

}  // namespace widesdf
