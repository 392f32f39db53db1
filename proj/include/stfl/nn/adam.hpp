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

#ifndef STFL_NN_ADAM_HPP_
#define STFL_NN_ADAM_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace stfl {

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

// One bias-corrected Adam update. Moments are allocated on the first call and
// must keep the same shapes afterwards.
void AdamStep(std::span<const std::span<double>> parameters,
              std::span<const std::span<const double>> gradients,
              AdamState& state, double learning_rate);

// parameters -= learning_rate * gradients
void SgdStep(std::span<const std::span<double>> parameters,
             std::span<const std::span<const double>> gradients,
             double learning_rate);

struct TrainConfig {
  double learning_rate = 0.001;
  std::size_t batch_size = 128;
  std::size_t epochs = 100;
  std::uint64_t seed = 0;

  void Validate() const;
};

class Rng;
// Shuffled index batches covering [0, n); the last batch may be short.
std::vector<std::vector<std::size_t>> ShuffledBatches(std::size_t n,
                                                      std::size_t batch_size,
                                                      Rng& rng);

}  // namespace stfl

#endif  // STFL_NN_ADAM_HPP_
