/*
 * Copyright 2026 The STFL Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "stfl/data/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "stfl/errors.hpp"
#include "stfl/nn/rng.hpp"

namespace stfl {
namespace {

constexpr double kStdFloor = 1e-8;

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell.push_back('"');
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cell.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else if (ch != '\r') {
      cell.push_back(ch);
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

double ParseNumber(const std::string& cell, const std::string& column, std::size_t line) {
  std::string_view text = cell;
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (text.empty() || text == "NA" || text == "NaN" || text == "nan") {
    throw ValidationError("line " + std::to_string(line) + ": missing value in column '" +
                          column + "'");
  }
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size() || !std::isfinite(value)) {
    throw ValidationError("line " + std::to_string(line) + ": non-numeric value '" + cell +
                          "' in column '" + column + "'");
  }
  return value;
}

}  // namespace

PartyDataset::PartyDataset(std::vector<std::string> ids,
                           std::vector<std::string> feature_names, Matrix2D features,
                           std::optional<std::vector<double>> labels)
    : ids_(std::move(ids)),
      feature_names_(std::move(feature_names)),
      features_(std::move(features)),
      labels_(std::move(labels)) {
  if (features_.rows() != ids_.size() || features_.cols() != feature_names_.size()) {
    throw ShapeError("PartyDataset: " + std::to_string(ids_.size()) + " ids, " +
                     std::to_string(feature_names_.size()) + " feature names, features " +
                     features_.ShapeString());
  }
  if (labels_ && labels_->size() != ids_.size()) {
    throw ShapeError("PartyDataset: label count differs from row count");
  }
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!index_.emplace(ids_[i], i).second) {
      throw ValidationError("duplicate ID '" + ids_[i] + "'");
    }
  }
}

const std::vector<double>& PartyDataset::labels() const {
  if (!labels_) throw ContractError("PartyDataset: this party holds no labels");
  return *labels_;
}

std::size_t PartyDataset::RowOf(const std::string& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) throw ProtocolError("unknown sample ID '" + id + "'");
  return it->second;
}

Matrix2D PartyDataset::FeaturesFor(std::span<const std::string> ids) const {
  std::vector<std::size_t> rows;
  rows.reserve(ids.size());
  for (const auto& id : ids) rows.push_back(RowOf(id));
  return features_.SelectRows(rows);
}

Matrix2D PartyDataset::LabelsFor(std::span<const std::string> ids) const {
  const auto& y = labels();
  Matrix2D out(ids.size(), 1);
  for (std::size_t i = 0; i < ids.size(); ++i) out(i, 0) = y[RowOf(ids[i])];
  return out;
}

PartyDataset PartyDataset::Subset(std::span<const std::string> ids) const {
  std::optional<std::vector<double>> labels;
  if (labels_) {
    labels.emplace();
    for (const auto& id : ids) labels->push_back((*labels_)[RowOf(id)]);
  }
  return PartyDataset({ids.begin(), ids.end()}, feature_names_, FeaturesFor(ids),
                      std::move(labels));
}

PartyDataset PartyDataset::Project(std::span<const std::string> features,
                                   bool keep_labels) const {
  std::vector<std::size_t> columns;
  for (const auto& name : features) {
    const auto it = std::find(feature_names_.begin(), feature_names_.end(), name);
    if (it == feature_names_.end()) throw ValidationError("unknown feature '" + name + "'");
    columns.push_back(static_cast<std::size_t>(it - feature_names_.begin()));
  }
  Matrix2D out(rows(), columns.size());
  for (std::size_t r = 0; r < rows(); ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) out(r, c) = features_(r, columns[c]);
  }
  return PartyDataset(ids_, {features.begin(), features.end()}, std::move(out),
                      keep_labels ? labels_ : std::nullopt);
}

PartyDataset ParseCsv(const std::string& text, const DatasetSchema& schema) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("CSV: missing header row");
  const auto header = SplitCsvLine(line);
  auto column_of = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ValidationError("CSV: missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t id_col = column_of(schema.id_column);
  const std::optional<std::size_t> label_col =
      schema.label_column ? std::optional(column_of(*schema.label_column)) : std::nullopt;

  std::vector<std::string> features = schema.feature_names;
  if (features.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c != id_col && c != label_col) features.push_back(header[c]);
    }
  }
  std::vector<std::size_t> feature_cols;
  for (const auto& f : features) feature_cols.push_back(column_of(f));

  std::vector<std::string> ids;
  std::vector<double> values;
  std::vector<double> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = SplitCsvLine(line);
    if (cells.size() != header.size()) {
      throw ValidationError("CSV line " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " cells, got " +
                            std::to_string(cells.size()));
    }
    ids.push_back(cells[id_col]);
    for (std::size_t c : feature_cols) values.push_back(ParseNumber(cells[c], header[c], line_no));
    if (label_col) {
      const double y = ParseNumber(cells[*label_col], header[*label_col], line_no);
      if (y != 0.0 && y != 1.0) {
        throw ValidationError("CSV line " + std::to_string(line_no) + ": label " +
                              cells[*label_col] + " is not 0 or 1");
      }
      labels.push_back(y);
    }
  }
  const std::size_t rows = ids.size();
  PartyDataset dataset(std::move(ids), std::move(features),
                       Matrix2D(rows, feature_cols.size(), std::move(values)),
                       label_col ? std::optional(std::move(labels)) : std::nullopt);
  if (schema.stats) return Standardize(dataset, *schema.stats);
  return dataset;
}

PartyDataset LoadCsv(const std::filesystem::path& path, const DatasetSchema& schema) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return ParseCsv(text.str(), schema);
}

void WriteCsv(const std::filesystem::path& path, const PartyDataset& dataset,
              const std::string& id_column, const std::string& label_column) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  // Shortest text that parses back to the same double.
  auto put = [&out](double v) {
    char buf[32];
    const auto end = std::to_chars(buf, buf + sizeof buf, v).ptr;
    out << ',' << std::string_view(buf, end - buf);
  };
  out << id_column;
  if (dataset.has_labels()) out << ',' << label_column;
  for (const auto& f : dataset.feature_names()) out << ',' << f;
  out << '\n';
  for (std::size_t r = 0; r < dataset.rows(); ++r) {
    out << dataset.ids()[r];
    if (dataset.has_labels()) put(dataset.labels()[r]);
    for (double v : dataset.features().row(r)) put(v);
    out << '\n';
  }
}

Partition MakePartition(std::span<const std::string> ids, const PartitionSpec& spec) {
  const std::size_t n = ids.size();
  if (n < 5) throw ValidationError("partition: need at least 5 samples, got " + std::to_string(n));
  if (spec.self_taught < 0 || spec.train <= 0 || spec.test <= 0 ||
      std::abs(spec.self_taught + spec.train + spec.test - 1.0) > 1e-9) {
    throw ValidationError("partition: fractions must be non-negative and sum to 1");
  }
  std::vector<std::string> order(ids.begin(), ids.end());
  std::sort(order.begin(), order.end());
  if (std::adjacent_find(order.begin(), order.end()) != order.end()) {
    throw ValidationError("partition: duplicate IDs");
  }
  Rng rng(Rng::Derive(spec.seed, 0x5eed));
  rng.Shuffle(order);
  const auto self_taught_n =
      static_cast<std::size_t>(std::floor(spec.self_taught * static_cast<double>(n)));
  const auto train_n = static_cast<std::size_t>(std::floor(spec.train * static_cast<double>(n)));
  Partition out;
  out.self_taught.assign(order.begin(), order.begin() + self_taught_n);
  out.train.assign(order.begin() + self_taught_n, order.begin() + self_taught_n + train_n);
  out.test.assign(order.begin() + self_taught_n + train_n, order.end());
  return out;
}

VerticalSplitSpec VerticalSplitSpec::Default(std::span<const std::string> features) {
  const std::size_t host_n = (features.size() + 1) / 2;
  VerticalSplitSpec spec;
  spec.host_features.assign(features.begin(), features.begin() + host_n);
  spec.guest_features.emplace_back(features.begin() + host_n, features.end());
  return spec;
}

void ValidateNewFeatures(std::span<const std::string> host_features,
                         std::span<const std::vector<std::string>> guest_features) {
  const std::set<std::string> host(host_features.begin(), host_features.end());
  for (std::size_t k = 0; k < guest_features.size(); ++k) {
    const auto& g = guest_features[k];
    const bool contributes = std::any_of(g.begin(), g.end(),
                                         [&](const std::string& f) { return !host.count(f); });
    if (!contributes) {
      throw SetupError(kNewFeatureCondition, "guest " + std::to_string(k + 1) +
                                                 " has no feature outside the host schema");
    }
  }
}

void VerticalSplitSpec::Validate(std::span<const std::string> all_features) const {
  if (guest_features.empty()) throw ValidationError("vertical split: no guest parties");
  ValidateNewFeatures(host_features, guest_features);
  std::set<std::string> known(all_features.begin(), all_features.end());
  std::set<std::string> seen;
  auto assign = [&](const std::string& f) {
    if (!known.count(f)) throw ValidationError("vertical split: unknown feature '" + f + "'");
    if (!seen.insert(f).second) {
      throw ValidationError("vertical split: feature '" + f + "' assigned twice");
    }
  };
  for (const auto& f : host_features) assign(f);
  for (const auto& g : guest_features) {
    for (const auto& f : g) assign(f);
  }
  if (seen.size() != known.size()) {
    throw ValidationError("vertical split: " + std::to_string(known.size() - seen.size()) +
                          " feature(s) not assigned to any party");
  }
}

VerticalParties VerticalSplit(const PartyDataset& dataset, const VerticalSplitSpec& spec) {
  if (!dataset.has_labels()) throw ValidationError("vertical split: dataset has no labels");
  spec.Validate(dataset.feature_names());
  VerticalParties parties;
  parties.host = dataset.Project(spec.host_features, true);
  for (const auto& g : spec.guest_features) parties.guests.push_back(dataset.Project(g, false));
  return parties;
}

StandardizationStats ComputeStats(const PartyDataset& dataset,
                                  std::span<const std::string> ids) {
  if (ids.empty()) throw ValidationError("standardization: no rows to fit");
  const Matrix2D x = dataset.FeaturesFor(ids);
  StandardizationStats stats;
  stats.mean.assign(x.cols(), 0.0);
  stats.stddev.assign(x.cols(), 0.0);
  const double n = static_cast<double>(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) stats.mean[c] += x(r, c);
  }
  for (double& m : stats.mean) m /= n;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      const double d = x(r, c) - stats.mean[c];
      stats.stddev[c] += d * d;
    }
  }
  for (double& s : stats.stddev) s = std::max(std::sqrt(s / n), kStdFloor);
  return stats;
}

PartyDataset Standardize(const PartyDataset& dataset, const StandardizationStats& stats) {
  if (stats.mean.size() != dataset.feature_count() ||
      stats.stddev.size() != dataset.feature_count()) {
    throw ShapeError("standardize: stats cover " + std::to_string(stats.mean.size()) +
                     " features, dataset has " + std::to_string(dataset.feature_count()));
  }
  Matrix2D x = dataset.features();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      x(r, c) = (x(r, c) - stats.mean[c]) / std::max(stats.stddev[c], kStdFloor);
    }
  }
  return PartyDataset(dataset.ids(), dataset.feature_names(), std::move(x),
                      dataset.has_labels() ? std::optional(dataset.labels()) : std::nullopt);
}

}  // namespace stfl
