#include "widesdf/panel.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "widesdf/architecture.hpp"

namespace widesdf {

std::size_t PanelDataset::index_of(std::string_view date) const {
  for (std::size_t t = 0; t < periods.size(); ++t) {
    if (periods[t].date == date) return t;
  }
  throw std::out_of_range("unknown period: " + std::string(date));
}

std::vector<std::string> PanelDataset::dates() const {
  std::vector<std::string> out;
  out.reserve(periods.size());
  for (const auto& p : periods) out.push_back(p.date);
  return out;
}

PanelDataset PanelDataset::slice(std::size_t first, std::size_t count) const {
  if (first + count > periods.size()) throw std::out_of_range("panel slice out of range");
  PanelDataset out;
  out.characteristic_names = characteristic_names;
  out.periods.assign(periods.begin() + static_cast<std::ptrdiff_t>(first),
                     periods.begin() + static_cast<std::ptrdiff_t>(first + count));
  return out;
}

void PanelDataset::validate(bool require_unit_range) const {
  const auto d = static_cast<Eigen::Index>(characteristic_names.size());
  for (std::size_t t = 1; t < periods.size(); ++t) {
    if (!(periods[t - 1].date < periods[t].date)) {
      throw std::invalid_argument("period dates must be strictly increasing at " + periods[t].date);
    }
  }
  for (const auto& p : periods) {
    if (p.X.rows() < 1) throw std::invalid_argument("period " + p.date + " is empty");
    if (p.X.cols() != d) {
      throw std::invalid_argument("period " + p.date + " has wrong characteristic count");
    }
    if (p.r_next.size() != p.X.rows() ||
        p.asset_ids.size() != static_cast<std::size_t>(p.X.rows())) {
      throw std::invalid_argument("period " + p.date + " rows are misaligned");
    }
    if (!p.X.allFinite() || !p.r_next.allFinite()) {
      throw std::invalid_argument("period " + p.date + " contains non-finite values");
    }
    if (require_unit_range && p.X.size() > 0 && p.X.cwiseAbs().maxCoeff() > 0.5) {
      throw std::invalid_argument("period " + p.date + " has characteristics outside [-0.5, 0.5]");
    }
  }
}

std::string PanelDataset::content_hash() const {
  std::string bytes;
  auto put_doubles = [&bytes](const double* data, Eigen::Index n) {
    bytes.append(reinterpret_cast<const char*>(data), static_cast<std::size_t>(n) * sizeof(double));
  };
  for (const auto& name : characteristic_names) {
    bytes += name;
    bytes.push_back('\0');
  }
  for (const auto& p : periods) {
    bytes += p.date;
    bytes.push_back('\0');
    for (const auto& id : p.asset_ids) {
      bytes += id;
      bytes.push_back('\0');
    }
    const Eigen::MatrixXd x = p.X;
    put_doubles(x.data(), x.size());
    put_doubles(p.r_next.data(), p.r_next.size());
  }
  return fnv1a_hex(bytes);
}

}  // namespace widesdf
