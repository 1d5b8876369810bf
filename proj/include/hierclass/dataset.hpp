#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include <Eigen/Dense>

#include "hierclass/rng.hpp"

namespace hierclass {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// n cases of p covariates plus class indices into a hierarchy's leaf order.
struct Dataset {
  Eigen::MatrixXd X;  // n x p
  std::vector<int> y;
  std::vector<std::string> feature_names;
  bool standardized = false;
  Eigen::VectorXd center;  // per-column shift applied when standardized
  Eigen::VectorXd spread;  // per-column divisor applied when standardized

  Dataset() = default;
  Dataset(Eigen::MatrixXd x, std::vector<int> labels) : X(std::move(x)), y(std::move(labels)) {
    if (static_cast<std::size_t>(X.rows()) != y.size())
      throw DataError("covariate rows and label count differ");
  }

  std::size_t size() const noexcept { return y.size(); }
  std::size_t num_features() const noexcept { return static_cast<std::size_t>(X.cols()); }
  bool empty() const noexcept { return y.empty(); }

  Dataset subset(std::span<const int> rows) const {
    Dataset out;
    out.X.resize(static_cast<Eigen::Index>(rows.size()), X.cols());
    out.y.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out.X.row(static_cast<Eigen::Index>(i)) = X.row(rows[i]);
      out.y.push_back(y[rows[i]]);
    }
    out.feature_names = feature_names;
    out.standardized = standardized;
    out.center = center;
    out.spread = spread;
    return out;
  }

  Dataset head(std::size_t n) const {
    std::vector<int> idx(std::min(n, size()));
    std::iota(idx.begin(), idx.end(), 0);
    return subset(idx);
  }

  Dataset tail_from(std::size_t start) const {
    std::vector<int> idx(size() > start ? size() - start : 0);
    std::iota(idx.begin(), idx.end(), static_cast<int>(start));
    return subset(idx);
  }
};

struct CsvSchema {
  std::string label_column = "label";
  std::vector<std::string> feature_columns;  // empty: every non-label column
  std::vector<std::string> labels;           // declared class set, in class-index order
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::string trim(std::string s) {
  auto not_space = [](unsigned char ch) { return !std::isspace(ch); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

inline std::optional<double> parse_number(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace detail

/// Reads a comma-separated file whose first line is a header. Rows and
/// columns in error messages are 1-based; row 1 is the first data row.
inline Dataset read_csv(std::istream& in, const CsvSchema& schema) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("csv: missing header line");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = detail::split_csv_line(line);
  for (auto& h : header) h = detail::trim(h);

  auto find_col = [&](const std::string& name) -> int {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("csv: column '" + name + "' not found in header");
    return static_cast<int>(it - header.begin());
  };

  int label_col = find_col(schema.label_column);
  std::vector<int> feat_cols;
  if (schema.feature_columns.empty()) {
    for (int j = 0; j < static_cast<int>(header.size()); ++j)
      if (j != label_col) feat_cols.push_back(j);
  } else {
    for (const auto& name : schema.feature_columns) feat_cols.push_back(find_col(name));
  }

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  int row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    ++row;
    auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw DataError("csv: row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                      " fields, header has " + std::to_string(header.size()));
    std::string lab = detail::trim(cells[label_col]);
    auto it = std::find(schema.labels.begin(), schema.labels.end(), lab);
    if (it == schema.labels.end())
      throw DataError("csv: row " + std::to_string(row) + ", column " + std::to_string(label_col + 1) +
                      ": unknown label '" + lab + "'");
    labels.push_back(static_cast<int>(it - schema.labels.begin()));
    std::vector<double> vals;
    vals.reserve(feat_cols.size());
    for (int j : feat_cols) {
      auto v = detail::parse_number(detail::trim(cells[j]));
      if (!v)
        throw DataError("csv: row " + std::to_string(row) + ", column " + std::to_string(j + 1) +
                        ": non-numeric value '" + cells[j] + "'");
      vals.push_back(*v);
    }
    rows.push_back(std::move(vals));
  }

  Dataset d;
  d.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(feat_cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < feat_cols.size(); ++j)
      d.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  d.y = std::move(labels);
  for (int j : feat_cols) d.feature_names.push_back(header[j]);
  return d;
}

inline Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("csv: cannot open '" + path + "'");
  return read_csv(in, schema);
}

inline void write_csv(std::ostream& out, const Dataset& d, std::span<const std::string> labels,
                      const std::string& label_column = "label") {
  out << label_column;
  for (std::size_t j = 0; j < d.num_features(); ++j)
    out << ',' << (j < d.feature_names.size() ? d.feature_names[j] : "x" + std::to_string(j + 1));
  out << '\n';
  out.precision(17);
  for (std::size_t i = 0; i < d.size(); ++i) {
    out << labels[d.y[i]];
    for (Eigen::Index j = 0; j < d.X.cols(); ++j) out << ',' << d.X(static_cast<Eigen::Index>(i), j);
    out << '\n';
  }
}

inline void save_csv(const std::string& path, const Dataset& d, std::span<const std::string> labels) {
  std::ofstream out(path);
  if (!out) throw DataError("csv: cannot write '" + path + "'");
  write_csv(out, d, labels);
}

struct StandardizedData {
  Dataset train;
  std::vector<Dataset> others;
};

/// Centers and scales every column of `train` to mean 0, sd 1 (n-1
/// convention) and applies the same train statistics to `others`.
inline StandardizedData standardize(const Dataset& train, std::span<const Dataset> others = {}) {
  if (train.size() < 2) throw DataError("standardize: training set needs at least 2 cases");
  const double n = static_cast<double>(train.size());
  Eigen::VectorXd mean = train.X.colwise().mean().transpose();
  Eigen::VectorXd sd(train.X.cols());
  for (Eigen::Index j = 0; j < train.X.cols(); ++j) {
    double ss = (train.X.col(j).array() - mean(j)).square().sum();
    sd(j) = std::sqrt(ss / (n - 1.0));
    if (!(sd(j) > 0.0)) throw DataError("standardize: column " + std::to_string(j + 1) + " has zero variance");
  }
  auto apply = [&](Dataset d) {
    if (d.num_features() != static_cast<std::size_t>(mean.size()))
      throw DataError("standardize: feature count mismatch");
    d.X = (d.X.rowwise() - mean.transpose()).array().rowwise() / sd.transpose().array();
    d.standardized = true;
    d.center = mean;
    d.spread = sd;
    return d;
  };
  StandardizedData out;
  out.train = apply(train);
  for (const auto& o : others) out.others.push_back(apply(o));
  return out;
}

struct Splits {
  std::vector<Dataset> train;
  Dataset test;
  std::vector<std::vector<int>> train_rows;
  std::vector<int> test_rows;
};

/// Draws k pairwise-disjoint training sets of `size` cases without
/// replacement; every unsampled case goes to the shared test set.
inline Splits subsample_splits(const Dataset& pool, std::size_t k, std::size_t size, RngStream& rng) {
  if (k == 0 || size == 0) throw DataError("subsample_splits: need k >= 1 and size >= 1");
  if (k * size > pool.size())
    throw DataError("subsample_splits: pool of " + std::to_string(pool.size()) + " cannot supply " +
                    std::to_string(k) + " x " + std::to_string(size) + " cases");
  if (k * size == pool.size()) throw DataError("subsample_splits: no cases left for the test set");

  std::vector<int> idx(pool.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng.engine());

  Splits s;
  for (std::size_t r = 0; r < k; ++r) {
    std::vector<int> rows(idx.begin() + static_cast<std::ptrdiff_t>(r * size),
                          idx.begin() + static_cast<std::ptrdiff_t>((r + 1) * size));
    std::sort(rows.begin(), rows.end());
    s.train.push_back(pool.subset(rows));
    s.train_rows.push_back(std::move(rows));
  }
  s.test_rows.assign(idx.begin() + static_cast<std::ptrdiff_t>(k * size), idx.end());
  std::sort(s.test_rows.begin(), s.test_rows.end());
  s.test = pool.subset(s.test_rows);
  return s;
}

}  // namespace hierclass
