#include "widesdf/ingest.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <stdexcept>

namespace widesdf {

namespace {

struct RawRow {
  std::string asset;
  double ret = 0.0;
  std::vector<std::optional<double>> values;
};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return std::string(s.substr(first, last - first + 1));
}

std::optional<double> parse_number(const std::string& token) {
  if (token.empty()) return std::nullopt;
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end != token.c_str() + token.size() || errno == ERANGE || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

bool read_record(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

std::vector<std::string> read_header(std::istream& in, const std::filesystem::path& path) {
  std::string line;
  if (!read_record(in, line)) throw std::runtime_error("empty file: " + path.string());
  std::vector<std::string> header = split_csv_line(line);
  for (auto& h : header) h = trim(h);
  return header;
}

void check_header(const std::vector<std::string>& header, const IngestSchema& schema,
                  const std::filesystem::path& path) {
  if (header.size() < 4 || header[0] != schema.date_column || header[1] != schema.asset_column ||
      header[2] != schema.return_column) {
    throw std::runtime_error(path.string() + ": header must start with " + schema.date_column +
                             ", " + schema.asset_column + ", " + schema.return_column +
                             " followed by at least one characteristic");
  }
}

}  // namespace

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  out.push_back(std::move(field));
  return out;
}

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::vector<double> rank_standardize(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<double> out(n, 0.0);
  if (n < 2) return out;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  const double denom = static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    // ranks i+1 .. j+1 share their average
    const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) out[order[k]] = (avg_rank - 1.0) / denom - 0.5;
    i = j + 1;
  }
  return out;
}

IngestResult ingest_csv(const std::filesystem::path& path, const IngestSchema& schema) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const std::vector<std::string> header = read_header(in, path);
  check_header(header, schema, path);
  const std::size_t d = header.size() - 3;
  const std::set<std::string> missing(schema.missing_tokens.begin(), schema.missing_tokens.end());

  IngestResult result;
  result.panel.characteristic_names.assign(header.begin() + 3, header.end());
  std::map<std::string, std::vector<RawRow>> by_date;
  std::set<std::pair<std::string, std::string>> seen;

  std::string line;
  std::size_t line_no = 1;
  while (read_record(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    ++result.report.rows_read;
    auto reject = [&](std::string reason) {
      result.report.rejects.push_back({line_no, std::move(reason), line});
    };
    std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      reject("expected " + std::to_string(header.size()) + " fields, found " +
             std::to_string(fields.size()));
      continue;
    }
    for (auto& f : fields) f = trim(f);
    if (fields[0].empty() || fields[1].empty()) {
      reject("missing date or asset id");
      continue;
    }
    const auto ret = parse_number(fields[2]);
    if (!ret) {
      reject("unparsable return '" + fields[2] + "'");
      continue;
    }
    RawRow row{fields[1], *ret, {}};
    row.values.reserve(d);
    bool ok = true;
    for (std::size_t k = 0; k < d && ok; ++k) {
      const std::string& tok = fields[k + 3];
      if (tok.empty() || missing.contains(tok)) {
        row.values.emplace_back();
        continue;
      }
      const auto v = parse_number(tok);
      if (!v) {
        reject("unparsable value '" + tok + "' in column " + header[k + 3]);
        ok = false;
      } else {
        row.values.emplace_back(*v);
      }
    }
    if (!ok) continue;
    if (!seen.emplace(fields[0], fields[1]).second) {
      reject("duplicate (date, asset_id)");
      continue;
    }
    const auto n_missing = static_cast<double>(
        std::count_if(row.values.begin(), row.values.end(), [](const auto& v) { return !v; }));
    if (n_missing / static_cast<double>(d) > schema.max_missing_fraction) {
      ++result.report.rows_dropped_missing;
      by_date[fields[0]];  // the date still exists; it may end up empty
      continue;
    }
    by_date[fields[0]].push_back(std::move(row));
  }

  for (auto& [date, rows] : by_date) {
    if (rows.empty()) throw std::runtime_error("period " + date + " has no usable rows");
    const auto n = static_cast<Eigen::Index>(rows.size());
    PanelPeriod p;
    p.date = date;
    p.X = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(d));
    p.r_next.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      p.r_next(i) = rows[static_cast<std::size_t>(i)].ret;
      p.asset_ids.push_back(rows[static_cast<std::size_t>(i)].asset);
    }
    for (std::size_t k = 0; k < d; ++k) {
      std::vector<double> present;
      std::vector<Eigen::Index> where;
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto& v = rows[static_cast<std::size_t>(i)].values[k];
        if (v) {
          present.push_back(*v);
          where.push_back(i);
        } else {
          ++result.report.values_imputed;
        }
      }
      const std::vector<double> ranked = rank_standardize(present);
      for (std::size_t j = 0; j < where.size(); ++j) {
        p.X(where[j], static_cast<Eigen::Index>(k)) = ranked[j];
      }
    }
    result.panel.periods.push_back(std::move(p));
  }
  if (result.panel.periods.empty()) throw std::runtime_error(path.string() + ": no periods");
  return result;
}

void write_panel_csv(const std::filesystem::path& path, const PanelDataset& panel) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "date,asset_id,ret_excess_next";
  for (const auto& name : panel.characteristic_names) out << ',' << name;
  out << '\n';
  for (const auto& p : panel.periods) {
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      out << p.date << ',' << p.asset_ids[static_cast<std::size_t>(i)] << ','
          << format_double(p.r_next(i));
      for (Eigen::Index k = 0; k < p.X.cols(); ++k) out << ',' << format_double(p.X(i, k));
      out << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

PanelDataset read_panel_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const IngestSchema schema;
  const std::vector<std::string> header = read_header(in, path);
  check_header(header, schema, path);
  const std::size_t d = header.size() - 3;

  PanelDataset panel;
  panel.characteristic_names.assign(header.begin() + 3, header.end());
  std::vector<std::vector<double>> rows;
  std::vector<double> rets;
  std::vector<std::string> ids;
  std::string current;

  auto flush = [&]() {
    if (rows.empty()) return;
    PanelPeriod p;
    p.date = current;
    const auto n = static_cast<Eigen::Index>(rows.size());
    p.X.resize(n, static_cast<Eigen::Index>(d));
    p.r_next.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      p.r_next(i) = rets[static_cast<std::size_t>(i)];
      for (std::size_t k = 0; k < d; ++k) {
        p.X(i, static_cast<Eigen::Index>(k)) = rows[static_cast<std::size_t>(i)][k];
      }
    }
    p.asset_ids = std::move(ids);
    panel.periods.push_back(std::move(p));
    rows.clear();
    rets.clear();
    ids.clear();
  };

  std::string line;
  std::size_t line_no = 1;
  while (read_record(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": field count");
    }
    if (fields[0] != current) {
      flush();
      current = fields[0];
    }
    std::vector<double> values(d);
    for (std::size_t k = 0; k <= d; ++k) {
      const auto v = parse_number(trim(fields[k + 2]));
      if (!v) {
        throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                 ": unparsable number '" + fields[k + 2] + "'");
      }
      if (k == 0) rets.push_back(*v);
      else values[k - 1] = *v;
    }
    rows.push_back(std::move(values));
    ids.push_back(fields[1]);
  }
  flush();
  panel.validate(false);
  return panel;
}

void write_rejects_csv(const std::filesystem::path& path, const std::vector<RejectedRow>& rejects) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "line,reason,text\n";
  auto quote = [](const std::string& s) {
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + '"';
  };
  for (const auto& r : rejects) out << r.line << ',' << quote(r.reason) << ',' << quote(r.text) << '\n';
}

}  // namespace widesdf
