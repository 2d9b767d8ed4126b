// Dataset ingestion for delimited numeric text, reproducible train/test
// splitting (optionally stratified), digit-parity label transform, and
// persistence of split indices so every method consumes identical splits.
#pragma once

#include "nipa/targets.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>

namespace nipa {

namespace detail {

// Locale-independent double parse; '.' is the decimal separator everywhere.
inline bool parse_double(std::string_view token, double& out) {
  const char* begin = token.data();
  const char* end = begin + token.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc{} && ptr == end;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  const auto is_sep = [](char c) { return c == ',' || c == ' ' || c == '\t'; };
  while (i < line.size()) {
    while (i < line.size() && is_sep(line[i])) ++i;
    if (i >= line.size()) break;
    std::size_t j = i;
    while (j < line.size() && !is_sep(line[j])) ++j;
    fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

}  // namespace detail

/// Loads a comma/space/tab-delimited numeric file. `target_column` selects the
/// response (negative counts from the end, -1 = last). Remaining columns form
/// the design matrix in file order.
inline Dataset load_delimited(const std::string& path, int target_column, bool has_header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_delimited: cannot open " + path);

  std::vector<std::vector<double>> rows;
  std::string line;
  long line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && has_header) continue;
    const auto fields = detail::split_fields(line);
    if (fields.empty()) continue;  // blank line
    std::vector<double> row(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (!detail::parse_double(fields[c], row[c]))
        throw std::runtime_error("load_delimited: " + path + ":" + std::to_string(line_no) +
                                 ": column " + std::to_string(c + 1) + " is not numeric: '" +
                                 std::string(fields[c]) + "'");
    }
    if (width == 0) width = row.size();
    if (row.size() != width)
      throw std::runtime_error("load_delimited: " + path + ":" + std::to_string(line_no) +
                               ": expected " + std::to_string(width) + " fields, found " +
                               std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("load_delimited: " + path + ": no data rows");
  if (width < 2)
    throw std::runtime_error("load_delimited: " + path + ": need at least 2 columns");

  int tc = target_column;
  if (tc < 0) tc += static_cast<int>(width);
  if (tc < 0 || tc >= static_cast<int>(width))
    throw std::runtime_error("load_delimited: target column " + std::to_string(target_column) +
                             " out of range for " + std::to_string(width) + " columns");

  const Index n = static_cast<Index>(rows.size());
  Dataset ds;
  ds.X.resize(n, static_cast<Index>(width - 1));
  ds.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    ds.y[i] = row[static_cast<std::size_t>(tc)];
    Index k = 0;
    for (std::size_t c = 0; c < width; ++c)
      if (static_cast<int>(c) != tc) ds.X(i, k++) = row[c];
  }
  return ds;
}

struct SplitSpec {
  double train_fraction = 0.9;
  std::uint64_t seed = 0;
  bool stratify = false;  // classification only

  void validate() const {
    if (train_fraction <= 0.0 || train_fraction >= 1.0)
      throw std::invalid_argument("SplitSpec: train_fraction outside (0,1)");
  }
};

struct SplitIndices {
  std::vector<Index> train;
  std::vector<Index> test;
};

/// Disjoint, exhaustive, seed-reproducible index split. Stratified splits
/// preserve each class's train fraction to within one item.
inline SplitIndices split_indices(Index n, const SplitSpec& spec,
                                  const Vector* labels = nullptr) {
  spec.validate();
  if (n < 2) throw std::invalid_argument("split_indices: need at least 2 rows");

  Rng rng = make_rng(spec.seed);
  SplitIndices out;
  auto split_group = [&](std::vector<Index> group) {
    std::shuffle(group.begin(), group.end(), rng);
    const auto n_group = static_cast<double>(group.size());
    auto n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * n_group));
    n_train = std::min(n_train, group.size());
    out.train.insert(out.train.end(), group.begin(), group.begin() + static_cast<long>(n_train));
    out.test.insert(out.test.end(), group.begin() + static_cast<long>(n_train), group.end());
  };

  if (spec.stratify && labels != nullptr) {
    if (labels->size() != n) throw std::invalid_argument("split_indices: label length mismatch");
    std::vector<Index> zeros, ones;
    for (Index i = 0; i < n; ++i) ((*labels)[i] == 0.0 ? zeros : ones).push_back(i);
    split_group(std::move(zeros));
    split_group(std::move(ones));
  } else {
    std::vector<Index> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), Index{0});
    split_group(std::move(all));
  }
  if (out.train.empty() || out.test.empty())
    throw std::invalid_argument("split_indices: degenerate split (empty side)");
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

inline Dataset take_rows(const Dataset& ds, const std::vector<Index>& idx, SplitTag tag) {
  Dataset out;
  out.classification = ds.classification;
  out.tag = tag;
  out.X.resize(static_cast<Index>(idx.size()), ds.X.cols());
  out.y.resize(static_cast<Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.X.row(static_cast<Index>(i)) = ds.X.row(idx[i]);
    out.y[static_cast<Index>(i)] = ds.y[idx[i]];
  }
  return out;
}

inline std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec) {
  const auto idx = split_indices(ds.size(), spec,
                                 spec.stratify && ds.classification ? &ds.y : nullptr);
  return {take_rows(ds, idx.train, SplitTag::Train), take_rows(ds, idx.test, SplitTag::Test)};
}

/// Digit labels 0-9 to odd(1)/even(0).
inline Vector mnist_parity_labels(const Vector& digits) {
  Vector out(digits.size());
  for (Index i = 0; i < digits.size(); ++i) {
    const double d = digits[i];
    const double r = std::round(d);
    if (r < 0.0 || r > 9.0 || std::abs(d - r) > 1e-9)
      throw std::invalid_argument("mnist_parity_labels: label at row " + std::to_string(i) +
                                  " is " + std::to_string(d) + ", expected a digit 0-9");
    out[i] = static_cast<double>(static_cast<int>(r) % 2);
  }
  return out;
}

inline void write_indices(const std::string& path, const std::vector<Index>& idx) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_indices: cannot open " + path);
  for (Index i : idx) os << i << '\n';
  if (!os) throw std::runtime_error("write_indices: write failed for " + path);
}

inline std::vector<Index> read_indices(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("read_indices: cannot open " + path);
  std::vector<Index> out;
  long v;
  while (is >> v) out.push_back(v);
  return out;
}

/// First-n or seeded-random-n row subsample for desk-scale runs on the large
/// benchmarks. n = 0 keeps everything.
inline Dataset subsample_rows(const Dataset& ds, Index n, std::uint64_t seed,
                              bool random_rows = true) {
  if (n <= 0 || n >= ds.size()) return ds;
  std::vector<Index> idx(static_cast<std::size_t>(ds.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  if (random_rows) {
    Rng rng = make_rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
  }
  idx.resize(static_cast<std::size_t>(n));
  std::sort(idx.begin(), idx.end());
  return take_rows(ds, idx, ds.tag);
}

}  // namespace nipa
