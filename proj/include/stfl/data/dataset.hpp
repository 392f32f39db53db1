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

#ifndef STFL_DATA_DATASET_HPP_
#define STFL_DATA_DATASET_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "stfl/nn/matrix.hpp"

namespace stfl {

// One party's ID-indexed feature table. Only the host carries labels.
class PartyDataset {
 public:
  PartyDataset() = default;
  PartyDataset(std::vector<std::string> ids, std::vector<std::string> feature_names,
               Matrix2D features, std::optional<std::vector<double>> labels = std::nullopt);

  const std::vector<std::string>& ids() const { return ids_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const Matrix2D& features() const { return features_; }
  bool has_labels() const { return labels_.has_value(); }
  const std::vector<double>& labels() const;
  std::size_t rows() const { return ids_.size(); }
  std::size_t feature_count() const { return feature_names_.size(); }

  bool Contains(const std::string& id) const { return index_.count(id) > 0; }
  std::size_t RowOf(const std::string& id) const;

  // Rows in the requested order. Unknown IDs throw ProtocolError naming the ID.
  Matrix2D FeaturesFor(std::span<const std::string> ids) const;
  Matrix2D LabelsFor(std::span<const std::string> ids) const;
  PartyDataset Subset(std::span<const std::string> ids) const;
  // Column projection keeping the listed features in the given order.
  PartyDataset Project(std::span<const std::string> features, bool keep_labels) const;

 private:
  std::vector<std::string> ids_;
  std::vector<std::string> feature_names_;
  Matrix2D features_;
  std::optional<std::vector<double>> labels_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct StandardizationStats {
  std::vector<double> mean;
  std::vector<double> stddev;
};

struct DatasetSchema {
  std::string id_column = "id";
  std::optional<std::string> label_column;  // host only
  std::vector<std::string> feature_names;   // empty: every other column
  std::optional<StandardizationStats> stats;
};

// Header row required. Rejects missing columns, duplicate IDs, empty/NA or
// non-numeric feature cells, and labels outside {0, 1}.
PartyDataset LoadCsv(const std::filesystem::path& path, const DatasetSchema& schema);
PartyDataset ParseCsv(const std::string& text, const DatasetSchema& schema);
void WriteCsv(const std::filesystem::path& path, const PartyDataset& dataset,
              const std::string& id_column = "id", const std::string& label_column = "y");

struct PartitionSpec {
  double self_taught = 0.4;
  double train = 0.4;
  double test = 0.2;
  std::uint64_t seed = 0;
};

struct Partition {
  std::vector<std::string> self_taught;
  std::vector<std::string> train;
  std::vector<std::string> test;
};

// Shuffles the canonically sorted IDs with the seed, then takes
// floor(self_taught * N) and floor(train * N) IDs; the remainder is the test
// split. N = 569 gives 227 / 227 / 115.
Partition MakePartition(std::span<const std::string> ids, const PartitionSpec& spec);

// Every feature goes to exactly one party; the host also keeps the label.
struct VerticalSplitSpec {
  std::vector<std::string> host_features;
  std::vector<std::vector<std::string>> guest_features;

  // Host takes the first ceil(d / 2) features, a single guest the rest.
  static VerticalSplitSpec Default(std::span<const std::string> features);
  // Throws ValidationError for unknown/duplicated/unassigned features and
  // SetupError (new-feature) for a guest with nothing outside the host schema.
  void Validate(std::span<const std::string> all_features) const;
};

struct VerticalParties {
  PartyDataset host;
  std::vector<PartyDataset> guests;
};

VerticalParties VerticalSplit(const PartyDataset& dataset, const VerticalSplitSpec& spec);

// Each guest must hold at least one feature that the host does not.
void ValidateNewFeatures(std::span<const std::string> host_features,
                         std::span<const std::vector<std::string>> guest_features);

// Per-column mean and population standard deviation over the given rows,
// with the deviation floored at 1e-8.
StandardizationStats ComputeStats(const PartyDataset& dataset,
                                  std::span<const std::string> ids);
PartyDataset Standardize(const PartyDataset& dataset, const StandardizationStats& stats);

}  // namespace stfl

#endif  // STFL_DATA_DATASET_HPP_
