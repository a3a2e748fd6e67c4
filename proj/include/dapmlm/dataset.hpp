#pragma once

// CSV ingestion with sidecar schemas, per-attribute bounds, owner-side
// perturbation, z-score normalization and deterministic train/test splits.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dapmlm/noise.hpp"
#include "json.hpp"

namespace dapmlm {

struct AttributeBounds {
  double lower = 0.0;
  double upper = 0.0;

  AttributeBounds() = default;
  AttributeBounds(double g, double h) : lower(g), upper(h) {
    if (!(h >= g)) throw std::invalid_argument("attribute bounds: upper < lower");
    if (!std::isfinite(g) || !std::isfinite(h))
      throw std::invalid_argument("attribute bounds must be finite");
  }
  double range() const { return upper - lower; }
};

inline Sensitivity attribute_sensitivity(const AttributeBounds& bounds) {
  return Sensitivity(bounds.range());
}

// Column description parsed from the sidecar schema file. One line per
// feature column ("<name> numeric" or "<name> categorical <v0> <v1> ...",
// listed in ordinal order), final line "<name> label".
struct ColumnSpec {
  enum class Kind { Numeric, Categorical };
  std::string name;
  Kind kind = Kind::Numeric;
  std::vector<std::string> categories;  // ordinal encoding order
};

struct Schema {
  std::vector<ColumnSpec> features;
  std::string label_name;
};

inline Schema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open schema file: " + path.string());
  Schema schema;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string name, kind;
    ls >> name >> kind;
    if (kind == "label") {
      schema.label_name = name;
    } else if (kind == "numeric") {
      schema.features.push_back({name, ColumnSpec::Kind::Numeric, {}});
    } else if (kind == "categorical") {
      ColumnSpec spec{name, ColumnSpec::Kind::Categorical, {}};
      std::string cat;
      while (ls >> cat) spec.categories.push_back(cat);
      if (spec.categories.empty())
        throw std::runtime_error("schema: categorical column without categories: " + name);
      schema.features.push_back(std::move(spec));
    } else {
      throw std::runtime_error("schema: unknown column kind '" + kind + "'");
    }
  }
  if (schema.label_name.empty())
    throw std::runtime_error("schema: missing label column: " + path.string());
  return schema;
}

// Labeled numeric records. Values are validated against the declared bounds;
// bounds default to the per-column (min, max) of the data itself.
class Dataset {
 public:
  Dataset(std::string name, std::vector<std::vector<double>> rows,
          std::vector<std::string> labels,
          std::optional<std::vector<AttributeBounds>> bounds = std::nullopt)
      : name_(std::move(name)),
        rows_(std::move(rows)),
        labels_(std::move(labels)) {
    if (rows_.empty()) throw std::invalid_argument("dataset has no rows");
    if (labels_.size() != rows_.size())
      throw std::invalid_argument("dataset: label count does not match row count");
    const std::size_t d = rows_.front().size();
    if (d == 0) throw std::invalid_argument("dataset has no attributes");
    for (const auto& r : rows_) {
      if (r.size() != d)
        throw std::invalid_argument("dataset: ragged row");
      for (double v : r)
        if (!std::isfinite(v))
          throw std::invalid_argument("dataset: non-finite value");
    }
    if (bounds) {
      bounds_ = std::move(*bounds);
      if (bounds_.size() != d)
        throw std::invalid_argument("dataset: bounds count does not match attributes");
    } else {
      bounds_.reserve(d);
      for (std::size_t j = 0; j < d; ++j) {
        double lo = rows_[0][j], hi = rows_[0][j];
        for (const auto& r : rows_) {
          lo = std::min(lo, r[j]);
          hi = std::max(hi, r[j]);
        }
        bounds_.emplace_back(lo, hi);
      }
    }
    for (const auto& r : rows_)
      for (std::size_t j = 0; j < d; ++j)
        if (r[j] < bounds_[j].lower || r[j] > bounds_[j].upper)
          throw std::invalid_argument("dataset: value outside declared bounds");
  }

  const std::string& name() const { return name_; }
  const std::vector<std::vector<double>>& rows() const { return rows_; }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<AttributeBounds>& bounds() const { return bounds_; }
  std::size_t size() const { return rows_.size(); }
  std::size_t attribute_count() const { return rows_.front().size(); }

  std::vector<std::string> class_list() const {
    std::vector<std::string> classes = labels_;
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    return classes;
  }

 private:
  std::string name_;
  std::vector<std::vector<double>> rows_;
  std::vector<std::string> labels_;
  std::vector<AttributeBounds> bounds_;
};

// Noise-perturbed release. Deliberately a distinct type from Dataset: values
// may leave the raw bounds and no operation accepts one where the other is
// required.
class SyntheticDataset {
 public:
  SyntheticDataset(std::string name, std::vector<std::vector<double>> rows,
                   std::vector<std::string> labels, std::string owner,
                   std::optional<double> epsilon, bool perturbed)
      : name_(std::move(name)),
        rows_(std::move(rows)),
        labels_(std::move(labels)),
        owner_(std::move(owner)),
        epsilon_(epsilon),
        perturbed_(perturbed) {
    if (rows_.empty()) throw std::invalid_argument("synthetic dataset has no rows");
    if (labels_.size() != rows_.size())
      throw std::invalid_argument("synthetic dataset: label/row count mismatch");
  }

  const std::string& name() const { return name_; }
  const std::vector<std::vector<double>>& rows() const { return rows_; }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& owner() const { return owner_; }
  std::optional<double> epsilon() const { return epsilon_; }
  bool perturbed() const { return perturbed_; }
  std::size_t size() const { return rows_.size(); }
  std::size_t attribute_count() const { return rows_.front().size(); }

 private:
  std::string name_;
  std::vector<std::vector<double>> rows_;
  std::vector<std::string> labels_;
  std::string owner_;
  std::optional<double> epsilon_;
  bool perturbed_;
};

// PerCell draws independent noise for every value (the private release).
// PerRow reuses a single draw across one record's attributes, the
// compatibility mode behind --noise-per-row.
enum class NoisePlacement { PerCell, PerRow };

// Sampler is called as draw(column_scale) -> double; with PerRow it is
// called once per row at the largest column scale.
template <class Sampler>
SyntheticDataset perturb_dataset_with(const Dataset& data,
                                      const PrivacyBudget& budget,
                                      Sampler&& draw,
                                      NoisePlacement placement,
                                      std::string owner) {
  const std::size_t d = data.attribute_count();
  std::vector<double> scales(d);
  double max_scale = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    scales[j] = data.bounds()[j].range() / budget.epsilon();
    max_scale = std::max(max_scale, scales[j]);
  }
  std::vector<std::vector<double>> out = data.rows();
  for (auto& row : out) {
    if (placement == NoisePlacement::PerRow) {
      const double noise = draw(max_scale);
      for (double& v : row) v += noise;
    } else {
      for (std::size_t j = 0; j < d; ++j)
        if (scales[j] > 0.0) row[j] += draw(scales[j]);
    }
  }
  return SyntheticDataset(data.name(), std::move(out), data.labels(),
                          std::move(owner), budget.epsilon(), true);
}

inline SyntheticDataset perturb_dataset(const Dataset& data,
                                        const PrivacyBudget& budget,
                                        NoiseSource& source,
                                        NoisePlacement placement = NoisePlacement::PerCell,
                                        std::string owner = "") {
  return perturb_dataset_with(
      data, budget,
      [&](double b) { return sample_laplace(LaplaceScale(b), source); },
      placement, std::move(owner));
}

// Identity wrapper for runs without data perturbation; keeps the upload
// payload type uniform while recording that no noise was applied.
inline SyntheticDataset as_unperturbed_release(const Dataset& data,
                                               std::string owner = "") {
  return SyntheticDataset(data.name(), data.rows(), data.labels(),
                          std::move(owner), std::nullopt, false);
}

struct NormalizationParams {
  std::vector<double> mean;
  std::vector<double> stddev;  // population std; degenerate columns coerced to 1
};

inline NormalizationParams fit_normalizer(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw std::invalid_argument("fit_normalizer: empty input");
  const std::size_t d = rows.front().size();
  NormalizationParams p;
  p.mean.assign(d, 0.0);
  p.stddev.assign(d, 0.0);
  for (const auto& r : rows)
    for (std::size_t j = 0; j < d; ++j) p.mean[j] += r[j];
  for (double& m : p.mean) m /= static_cast<double>(rows.size());
  for (const auto& r : rows)
    for (std::size_t j = 0; j < d; ++j) {
      const double c = r[j] - p.mean[j];
      p.stddev[j] += c * c;
    }
  for (double& s : p.stddev) {
    s = std::sqrt(s / static_cast<double>(rows.size()));
    if (s == 0.0) s = 1.0;
  }
  return p;
}

inline std::vector<std::vector<double>> apply_normalizer(
    const std::vector<std::vector<double>>& rows, const NormalizationParams& p) {
  std::vector<std::vector<double>> out = rows;
  for (auto& r : out) {
    if (r.size() != p.mean.size())
      throw std::invalid_argument("apply_normalizer: column count mismatch");
    for (std::size_t j = 0; j < r.size(); ++j)
      r[j] = (r[j] - p.mean[j]) / p.stddev[j];
  }
  return out;
}

// Deterministic Fisher-Yates permutation of 0..n-1. std::shuffle is
// implementation-defined, so the draw sequence is fixed here.
inline std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(engine() % i);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

struct SplitPair {
  std::vector<std::vector<double>> train_rows;
  std::vector<std::string> train_labels;
  std::vector<std::vector<double>> test_rows;
  std::vector<std::string> test_labels;
};

// Shuffle by seed, then take floor(n*z) training rows. Floor (rather than
// round-half-up) matches the published split sizes for fractional n*z.
inline SplitPair split(const Dataset& data, double z, std::uint64_t seed) {
  if (!(z > 0.0 && z < 1.0))
    throw std::invalid_argument("split: fraction must lie in (0,1)");
  const std::size_t n = data.size();
  const auto n_train =
      static_cast<std::size_t>(std::floor(static_cast<double>(n) * z));
  if (n_train == 0 || n_train == n)
    throw std::invalid_argument("split: a side of the split would be empty");
  const auto idx = shuffled_indices(n, seed);
  SplitPair out;
  out.train_rows.reserve(n_train);
  out.test_rows.reserve(n - n_train);
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = idx[i];
    if (i < n_train) {
      out.train_rows.push_back(data.rows()[k]);
      out.train_labels.push_back(data.labels()[k]);
    } else {
      out.test_rows.push_back(data.rows()[k]);
      out.test_labels.push_back(data.labels()[k]);
    }
  }
  return out;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ls(line);
  while (std::getline(ls, cell, ',')) {
    // trim surrounding whitespace
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

}  // namespace detail

// CSV loader: first line is the header, final column is the class label.
// Categorical features are integer-encoded by their ordinal position in the
// schema; without a schema every feature column must parse as a real.
inline Dataset load_csv(const std::filesystem::path& path,
                        std::optional<Schema> schema = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.empty())
    throw std::runtime_error("empty dataset file: " + path.string());
  const auto header = detail::split_csv_line(line);
  if (header.size() < 2)
    throw std::runtime_error("dataset needs at least one feature and a label column");
  const std::size_t d = header.size() - 1;

  if (schema && schema->features.size() != d)
    throw std::runtime_error("schema feature count does not match CSV header");

  std::vector<std::vector<double>> rows;
  std::vector<std::string> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": expected " + std::to_string(header.size()) +
                               " columns, got " + std::to_string(cells.size()));
    std::vector<double> row(d);
    for (std::size_t j = 0; j < d; ++j) {
      if (schema && schema->features[j].kind == ColumnSpec::Kind::Categorical) {
        const auto& cats = schema->features[j].categories;
        const auto it = std::find(cats.begin(), cats.end(), cells[j]);
        if (it == cats.end())
          throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                   ": unknown category '" + cells[j] +
                                   "' in column " + header[j]);
        row[j] = static_cast<double>(it - cats.begin());
      } else {
        std::size_t consumed = 0;
        double v = 0.0;
        try {
          v = std::stod(cells[j], &consumed);
        } catch (const std::exception&) {
          consumed = 0;
        }
        if (consumed != cells[j].size() || !std::isfinite(v))
          throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                   ": cannot parse '" + cells[j] +
                                   "' in column " + header[j]);
        row[j] = v;
      }
    }
    rows.push_back(std::move(row));
    labels.push_back(cells.back());
  }
  if (rows.empty())
    throw std::runtime_error("dataset has a header but no rows: " + path.string());
  return Dataset(path.stem().string(), std::move(rows), std::move(labels));
}

inline std::uint64_t file_checksum(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file for checksum: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a64(ss.str());
}

// Ingestion facts: sizes, classes, bounds, encodings, source checksum.
inline nlohmann::json dataset_manifest(const Dataset& data,
                                       const std::optional<Schema>& schema,
                                       std::uint64_t checksum) {
  nlohmann::json m;
  m["name"] = data.name();
  m["rows"] = data.size();
  m["attributes"] = data.attribute_count();
  m["classes"] = data.class_list();
  m["source_checksum"] = checksum;
  auto& bounds = m["bounds"] = nlohmann::json::array();
  for (const auto& b : data.bounds())
    bounds.push_back({{"lower", b.lower}, {"upper", b.upper}});
  auto& enc = m["encodings"] = nlohmann::json::array();
  if (schema) {
    for (const auto& col : schema->features) {
      if (col.kind == ColumnSpec::Kind::Categorical)
        enc.push_back({{"column", col.name}, {"ordinal", col.categories}});
    }
  }
  return m;
}

}  // namespace dapmlm
