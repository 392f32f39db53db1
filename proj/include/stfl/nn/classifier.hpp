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

#ifndef STFL_NN_CLASSIFIER_HPP_
#define STFL_NN_CLASSIFIER_HPP_

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "stfl/nn/adam.hpp"
#include "stfl/nn/matrix.hpp"
#include "stfl/nn/mlp.hpp"

namespace stfl {

// Binary classifier: one Tanh hidden layer of hidden_multiplier * input_width
// units, Sigmoid output, trained with BCE.
MlpModel MakeClassifier(std::size_t input_width, std::size_t hidden_multiplier = 5);

struct EpochMetrics {
  std::size_t epoch = 0;
  double loss = 0.0;      // row-weighted mean BCE over the epoch
  double accuracy = 0.0;  // of the pre-update batch predictions
};

using EpochCallback = std::function<void(const EpochMetrics&)>;
// Feature rows for the given IDs, in the given order.
using FeatureSource = std::function<Matrix2D(std::span<const std::string> ids)>;

struct ClassifierTrainResult {
  MlpModel model;
  std::vector<EpochMetrics> history;
  double seconds = 0.0;
};

// Adam over shuffled mini-batches of `ids`; labels(i, 0) belongs to ids[i].
// Initialization and batch order derive from config.seed only.
ClassifierTrainResult TrainClassifier(std::size_t input_width, std::span<const std::string> ids,
                                      const Matrix2D& labels, const FeatureSource& features,
                                      const TrainConfig& config,
                                      const EpochCallback& on_epoch = {});

// Column of probabilities, evaluated batch by batch.
Matrix2D PredictClassifier(const MlpModel& model, std::span<const std::string> ids,
                           const FeatureSource& features, std::size_t batch_size);

// Seed salts shared by every trainer of a master model.
inline constexpr std::uint64_t kInitSalt = 11;
inline constexpr std::uint64_t kShuffleSalt = 12;

}  // namespace stfl

#endif  // STFL_NN_CLASSIFIER_HPP_
