#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "icqr/matrix.hpp"
#include "icqr/random.hpp"

namespace icqr {

// Tabular regression data: N rows of D features plus a response.
struct Dataset {
  Matrix features;
  std::vector<double> response;
  std::vector<std::string> column_names;
  std::string response_name = "y";

  std::size_t size() const noexcept { return response.size(); }
  std::size_t dimension() const noexcept { return features.cols(); }

  void validate() const {
    if (features.rows() != response.size())
      throw std::invalid_argument("Dataset: " + std::to_string(features.rows()) +
                                  " feature rows but " +
                                  std::to_string(response.size()) + " responses");
    if (features.cols() == 0) throw std::invalid_argument("Dataset: no feature columns");
    if (response.empty()) throw std::invalid_argument("Dataset: no rows");
    if (column_names.size() != features.cols())
      throw std::invalid_argument("Dataset: column name count does not match D");
    for (std::size_t r = 0; r < size(); ++r) {
      if (!std::isfinite(response[r]))
        throw std::invalid_argument("Dataset: non-finite response at row " +
                                    std::to_string(r));
      for (std::size_t c = 0; c < dimension(); ++c)
        if (!std::isfinite(features(r, c)))
          throw std::invalid_argument("Dataset: non-finite value at row " +
                                      std::to_string(r) + ", column '" +
                                      column_names[c] + "'");
    }
  }

  Dataset subset(std::span<const std::size_t> rows) const {
    Dataset out;
    out.features = Matrix(rows.size(), dimension());
    out.response.resize(rows.size());
    out.column_names = column_names;
    out.response_name = response_name;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto src = features.row(rows[i]);
      std::copy(src.begin(), src.end(), out.features.row(i).begin());
      out.response[i] = response[rows[i]];
    }
    return out;
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

inline std::vector<std::string> default_column_names(std::size_t d) {
  std::vector<std::string> names;
  names.reserve(d);
  for (std::size_t c = 0; c < d; ++c) names.push_back("x" + std::to_string(c + 1));
  return names;
}

inline Dataset make_dataset(Matrix features, std::vector<double> response,
                            std::vector<std::string> column_names = {}) {
  Dataset d;
  if (column_names.empty()) column_names = default_column_names(features.cols());
  d.features = std::move(features);
  d.response = std::move(response);
  d.column_names = std::move(column_names);
  d.validate();
  return d;
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {

// Splits one RFC-4180 record. Quoted fields may contain commas and doubled
// quotes; embedded newlines are not supported.
inline std::vector<std::string> split_csv_record(std::string_view line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += ch;
    }
  }
  if (quoted) throw std::runtime_error("unterminated quoted field");
  fields.push_back(std::move(field));
  return fields;
}

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline bool parse_double(std::string_view text, double& out) {
  text = trim(text);
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size() && std::isfinite(out);
}

inline std::string quote_csv(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

inline std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace detail

// Reads a header-first CSV. Every cell must parse as a finite number; the
// error message names the offending line and column.
inline Dataset parse_csv(std::istream& in, const std::string& response_column,
                         const std::string& source = "<stream>") {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(source + ": empty file");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  std::vector<std::string> header = detail::split_csv_record(line);
  for (auto& h : header) h = std::string(detail::trim(h));

  const auto it = std::find(header.begin(), header.end(), response_column);
  if (it == header.end())
    throw std::runtime_error(source + ": response column '" + response_column +
                             "' not found in header");
  const std::size_t response_index = static_cast<std::size_t>(it - header.begin());
  if (header.size() < 2)
    throw std::runtime_error(source + ": need at least one feature column");

  Dataset d;
  d.response_name = response_column;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (c != response_index) d.column_names.push_back(header[c]);

  std::vector<double> row(header.size() - 1);
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (detail::trim(line).empty()) continue;
    std::vector<std::string> cells;
    try {
      cells = detail::split_csv_record(line);
    } catch (const std::exception& e) {
      throw std::runtime_error(source + ": line " + std::to_string(line_number) + ": " +
                               e.what());
    }
    if (cells.size() != header.size())
      throw std::runtime_error(source + ": line " + std::to_string(line_number) +
                               ": expected " + std::to_string(header.size()) +
                               " cells, found " + std::to_string(cells.size()));
    double y = 0.0;
    for (std::size_t c = 0, f = 0; c < cells.size(); ++c) {
      double v = 0.0;
      if (!detail::parse_double(cells[c], v))
        throw std::runtime_error(source + ": line " + std::to_string(line_number) +
                                 ", column " + std::to_string(c + 1) + " ('" +
                                 header[c] + "'): non-numeric or missing value '" +
                                 cells[c] + "'");
      if (c == response_index)
        y = v;
      else
        row[f++] = v;
    }
    d.features.append_row(row);
    d.response.push_back(y);
  }
  if (d.response.empty()) throw std::runtime_error(source + ": no data rows");
  d.validate();
  return d;
}

inline Dataset load_csv(const std::string& path, const std::string& response_column) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return parse_csv(in, response_column, path);
}

// Writes features followed by the response column. Values use the shortest
// representation that round-trips exactly.
inline void write_csv(const Dataset& d, std::ostream& out) {
  for (const auto& name : d.column_names) out << detail::quote_csv(name) << ',';
  out << detail::quote_csv(d.response_name) << '\n';
  for (std::size_t r = 0; r < d.size(); ++r) {
    for (double v : d.features.row(r)) out << detail::format_double(v) << ',';
    out << detail::format_double(d.response[r]) << '\n';
  }
}

inline void write_csv(const Dataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write_csv(d, out);
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Normalization

// Per-column z-score transform. Constant columns keep scale 1.
struct Normalizer {
  std::vector<double> center;
  std::vector<double> scale;

  std::size_t dimension() const noexcept { return center.size(); }

  void apply_inplace(std::span<double> x) const {
    for (std::size_t c = 0; c < x.size(); ++c) x[c] = (x[c] - center[c]) / scale[c];
  }

  std::vector<double> apply(std::span<const double> x) const {
    check(x.size());
    std::vector<double> out(x.begin(), x.end());
    apply_inplace(out);
    return out;
  }

  Dataset apply(const Dataset& d) const {
    check(d.dimension());
    Dataset out = d;
    for (std::size_t r = 0; r < out.size(); ++r) apply_inplace(out.features.row(r));
    return out;
  }

  Dataset invert(const Dataset& d) const {
    check(d.dimension());
    Dataset out = d;
    for (std::size_t r = 0; r < out.size(); ++r) {
      auto x = out.features.row(r);
      for (std::size_t c = 0; c < x.size(); ++c) x[c] = x[c] * scale[c] + center[c];
    }
    return out;
  }

 private:
  void check(std::size_t d) const {
    if (d != center.size())
      throw std::invalid_argument("Normalizer: fitted on D=" +
                                  std::to_string(center.size()) + ", applied to D=" +
                                  std::to_string(d));
  }
};

inline Normalizer fit_normalizer(const Dataset& d) {
  if (d.size() < 2) throw std::invalid_argument("fit_normalizer: need at least 2 rows");
  Normalizer n;
  n.center = column_means(d.features);
  n.scale.assign(d.dimension(), 0.0);
  for (std::size_t r = 0; r < d.size(); ++r) {
    const auto x = d.features.row(r);
    for (std::size_t c = 0; c < x.size(); ++c) {
      const double dev = x[c] - n.center[c];
      n.scale[c] += dev * dev;
    }
  }
  for (double& s : n.scale) {
    s = std::sqrt(s / static_cast<double>(d.size()));
    if (!(s > 0.0)) s = 1.0;
  }
  return n;
}

// ---------------------------------------------------------------------------
// Train / calibration / validation split

struct SplitSpec {
  double train_fraction = 0.5;
  double cal_fraction = 0.25;
  double val_fraction = 0.25;
  std::uint64_t seed = 0;

  void validate() const {
    for (double f : {train_fraction, cal_fraction, val_fraction})
      if (!(f > 0.0 && f < 1.0))
        throw std::invalid_argument("SplitSpec: fractions must lie in (0,1)");
    if (std::abs(train_fraction + cal_fraction + val_fraction - 1.0) > 1e-9)
      throw std::invalid_argument("SplitSpec: fractions must sum to 1");
  }
};

struct SplitSizes {
  std::size_t train, calibration, validation;
};

// Calibration and validation get floor(fraction * N); the remainder trains.
inline SplitSizes split_sizes(std::size_t n, const SplitSpec& s) {
  s.validate();
  const auto part = [n](double f) {
    return static_cast<std::size_t>(std::floor(f * static_cast<double>(n) + 1e-9));
  };
  SplitSizes sizes{0, part(s.cal_fraction), part(s.val_fraction)};
  if (sizes.calibration + sizes.validation >= n)
    throw std::invalid_argument("split: N=" + std::to_string(n) +
                                " leaves the training partition empty");
  sizes.train = n - sizes.calibration - sizes.validation;
  if (sizes.calibration == 0 || sizes.validation == 0)
    throw std::invalid_argument("split: N=" + std::to_string(n) +
                                " is too small for a non-empty calibration and "
                                "validation partition");
  return sizes;
}

struct ThreeWaySplit {
  Dataset train;
  Dataset calibration;
  Dataset validation;
  // Source row of each partition row, in partition order.
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> calibration_rows;
  std::vector<std::size_t> validation_rows;
};

inline ThreeWaySplit split(const Dataset& d, const SplitSpec& s) {
  const SplitSizes sizes = split_sizes(d.size(), s);
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(s.seed);
  std::shuffle(order.begin(), order.end(), rng);

  ThreeWaySplit out;
  const auto first = order.begin();
  out.train_rows.assign(first, first + sizes.train);
  out.calibration_rows.assign(first + sizes.train,
                              first + sizes.train + sizes.calibration);
  out.validation_rows.assign(first + sizes.train + sizes.calibration, order.end());
  out.train = d.subset(out.train_rows);
  out.calibration = d.subset(out.calibration_rows);
  out.validation = d.subset(out.validation_rows);
  return out;
}

}  // namespace icqr
