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

#include "stfl/nn/adam.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "stfl/errors.hpp"
#include "stfl/nn/rng.hpp"

namespace stfl {
namespace {

void CheckShapes(std::span<const std::span<double>> parameters,
                 std::span<const std::span<const double>> gradients,
                 const char* op) {
  if (parameters.size() != gradients.size()) {
    throw ContractError(std::string(op) + ": " + std::to_string(parameters.size()) +
                        " parameter tensors vs " + std::to_string(gradients.size()) +
                        " gradient tensors");
  }
  for (std::size_t i = 0; i < parameters.size(); ++i) {
    if (parameters[i].size() != gradients[i].size()) {
      throw ContractError(std::string(op) + ": tensor " + std::to_string(i) +
                          " size mismatch");
    }
  }
}

}  // namespace

void AdamStep(std::span<const std::span<double>> parameters,
              std::span<const std::span<const double>> gradients,
              AdamState& state, double learning_rate) {
  CheckShapes(parameters, gradients, "AdamStep");
  if (state.step == 0 && state.first_moment.empty()) {
    for (const auto& p : parameters) {
      state.first_moment.emplace_back(p.size(), 0.0);
      state.second_moment.emplace_back(p.size(), 0.0);
    }
  }
  if (state.first_moment.size() != parameters.size()) {
    throw ContractError("AdamStep: optimizer state tracks a different parameter set");
  }
  for (std::size_t i = 0; i < parameters.size(); ++i) {
    if (state.first_moment[i].size() != parameters[i].size()) {
      throw ContractError("AdamStep: moment shape mismatch at tensor " +
                          std::to_string(i));
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < parameters.size(); ++i) {
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    auto p = parameters[i];
    auto g = gradients[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k] * g[k];
      const double m_hat = m[k] / correction1;
      const double v_hat = v[k] / correction2;
      p[k] -= learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

void SgdStep(std::span<const std::span<double>> parameters,
             std::span<const std::span<const double>> gradients,
             double learning_rate) {
  CheckShapes(parameters, gradients, "SgdStep");
  for (std::size_t i = 0; i < parameters.size(); ++i) {
    for (std::size_t k = 0; k < parameters[i].size(); ++k) {
      parameters[i][k] -= learning_rate * gradients[i][k];
    }
  }
}

void TrainConfig::Validate() const {
  if (batch_size < 1) throw ValidationError("TrainConfig: batch_size must be >= 1");
  if (epochs < 1) throw ValidationError("TrainConfig: epochs must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("TrainConfig: learning_rate must be positive");
  }
}

std::vector<std::vector<std::size_t>> ShuffledBatches(std::size_t n,
                                                      std::size_t batch_size,
                                                      Rng& rng) {
  if (batch_size == 0) throw ValidationError("ShuffledBatches: batch_size is 0");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.Shuffle(order);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t begin = 0; begin < n; begin += batch_size) {
    const std::size_t end = std::min(n, begin + batch_size);
    batches.emplace_back(order.begin() + begin, order.begin() + end);
  }
  return batches;
}

}  // namespace stfl
