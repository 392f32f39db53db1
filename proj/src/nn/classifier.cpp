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

#include "stfl/nn/classifier.hpp"

#include <chrono>
#include <cmath>

#include "stfl/errors.hpp"
#include "stfl/nn/loss.hpp"
#include "stfl/nn/rng.hpp"

namespace stfl {

MlpModel MakeClassifier(std::size_t input_width, std::size_t hidden_multiplier) {
  if (input_width == 0 || hidden_multiplier == 0) {
    throw ValidationError("classifier: input width and hidden multiplier must be positive");
  }
  const LayerSpec layers[] = {{hidden_multiplier * input_width, Activation::kTanh},
                              {1, Activation::kSigmoid}};
  return MakeMlp(input_width, layers);
}

ClassifierTrainResult TrainClassifier(std::size_t input_width, std::span<const std::string> ids,
                                      const Matrix2D& labels, const FeatureSource& features,
                                      const TrainConfig& config, const EpochCallback& on_epoch) {
  config.Validate();
  if (ids.empty()) throw ValidationError("classifier: empty training set");
  if (labels.rows() != ids.size() || labels.cols() != 1) {
    throw ShapeError("classifier: labels " + labels.ShapeString() + " for " +
                     std::to_string(ids.size()) + " ids");
  }
  const auto started = std::chrono::steady_clock::now();
  ClassifierTrainResult result;
  result.model = MakeClassifier(input_width);
  Rng init_rng(Rng::Derive(config.seed, kInitSalt));
  Rng shuffle_rng(Rng::Derive(config.seed, kShuffleSalt));
  InitializeGlorot(result.model, init_rng);

  AdamState adam;
  const double n = static_cast<double>(ids.size());
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    EpochMetrics metrics;
    metrics.epoch = epoch;
    for (const auto& batch : ShuffledBatches(ids.size(), config.batch_size, shuffle_rng)) {
      std::vector<std::string> batch_ids;
      batch_ids.reserve(batch.size());
      for (std::size_t i : batch) batch_ids.push_back(ids[i]);
      const Matrix2D x = features(batch_ids);
      if (x.rows() != batch.size() || x.cols() != input_width) {
        throw ShapeError("classifier: feature source returned " + x.ShapeString() +
                         ", expected " + std::to_string(batch.size()) + "x" +
                         std::to_string(input_width));
      }
      const Matrix2D y = labels.SelectRows(batch);
      auto [output, cache] = Forward(result.model, x);
      const LossResult loss = BceLoss(output, y);
      if (!std::isfinite(loss.value)) {
        throw NumericalError("classifier: non-finite loss at epoch " + std::to_string(epoch));
      }
      const double weight = static_cast<double>(batch.size()) / n;
      metrics.loss += weight * loss.value;
      for (std::size_t r = 0; r < output.rows(); ++r) {
        metrics.accuracy += ((output(r, 0) >= 0.5) == (y(r, 0) == 1.0)) / n;
      }
      const MlpGradients grads = Backward(result.model, cache, loss.gradient);
      AdamStep(ParameterViews(result.model), GradientViews(grads), adam, config.learning_rate);
    }
    result.history.push_back(metrics);
    if (on_epoch) on_epoch(metrics);
  }
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

Matrix2D PredictClassifier(const MlpModel& model, std::span<const std::string> ids,
                           const FeatureSource& features, std::size_t batch_size) {
  if (batch_size == 0) throw ValidationError("predict: batch size must be positive");
  Matrix2D out(ids.size(), 1);
  for (std::size_t begin = 0; begin < ids.size(); begin += batch_size) {
    const auto chunk = ids.subspan(begin, std::min(batch_size, ids.size() - begin));
    const Matrix2D p = Predict(model, features(chunk));
    for (std::size_t r = 0; r < chunk.size(); ++r) out(begin + r, 0) = p(r, 0);
  }
  return out;
}

}  // namespace stfl
