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

#ifndef STFL_RUNNER_EXPERIMENT_HPP_
#define STFL_RUNNER_EXPERIMENT_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "stfl/runner/config.hpp"

namespace stfl {

// Label 1 is the positive class.
struct ConfusionMatrix {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::size_t total() const { return tp + fp + fn + tn; }
  double accuracy() const;
  bool operator==(const ConfusionMatrix&) const = default;
};

struct Metrics {
  double accuracy = 0.0;
  ConfusionMatrix confusion;
};

// Predicted class is 1 when p >= threshold. Predictions outside [0, 1] or
// labels outside {0, 1} throw ValidationError.
Metrics ComputeMetrics(const Matrix2D& predictions, const Matrix2D& labels,
                       double threshold = 0.5);

struct RunReport {
  std::string method;
  std::string dataset;
  bool all_data = false;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  ConfusionMatrix confusion;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  double train_seconds = 0.0;     // joint / main training loop only
  double pretrain_seconds = 0.0;  // guest VAE self-training (stfl)
  std::vector<double> loss_curve;
  std::vector<std::string> guest_fingerprints_before;
  std::vector<std::string> guest_fingerprints_after;
  nlohmann::json config;

  // Row label used in comparison tables, e.g. "STFL" or "Centralized (all data)".
  std::string Label() const;
};

// Everything a run needs, standardized with training-split statistics.
struct PreparedData {
  Partition partition;
  std::vector<std::string> train_ids;  // train, or self-taught + train with all_data
  std::vector<std::string> test_ids;
  PartyDataset host;                 // labelled; train_ids + test_ids rows
  std::vector<PartyDataset> guests;  // every row
  PartyDataset combined;             // all features, labelled, every row
};

PreparedData PrepareData(const ExperimentConfig& config);

// Self-training settings for guest k (0-based), shared by run and train-vae.
TrainConfig GuestVaeConfig(const ExperimentConfig& config, std::size_t guest);

RunReport RunCentralized(const ExperimentConfig& config, const PreparedData& data);
RunReport RunHierarchical(const ExperimentConfig& config, const PreparedData& data);
RunReport RunStfl(const ExperimentConfig& config, const PreparedData& data);
RunReport RunBaselineMethod(const ExperimentConfig& config, const PreparedData& data);

// Validates, prepares the data and dispatches on config.method.
RunReport RunExperiment(const ExperimentConfig& config);
// One run per seed, everything else fixed.
std::vector<RunReport> RunSeeds(ExperimentConfig config, std::span<const std::uint64_t> seeds);

struct AccuracySummary {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for a single run
  std::size_t runs = 0;
};
AccuracySummary Summarize(std::span<const RunReport> reports);

}  // namespace stfl

#endif  // STFL_RUNNER_EXPERIMENT_HPP_
