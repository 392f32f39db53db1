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

#ifndef STFL_NN_LOSS_HPP_
#define STFL_NN_LOSS_HPP_

#include "stfl/nn/matrix.hpp"

namespace stfl {

// Predictions are clamped into [kBceClamp, 1 - kBceClamp] before taking logs,
// so a prediction exactly equal to its label costs about 1e-7, not 0.
inline constexpr double kBceClamp = 1e-7;

struct LossResult {
  double value = 0.0;
  Matrix2D gradient;  // dL/d(predictions)
};

// Mean binary cross-entropy over all entries. Labels must be exactly 0 or 1.
LossResult BceLoss(const Matrix2D& predictions, const Matrix2D& labels);

// Mean over rows of the per-row sum of squared errors.
LossResult SquaredErrorLoss(const Matrix2D& predictions, const Matrix2D& targets);

}  // namespace stfl

#endif  // STFL_NN_LOSS_HPP_
