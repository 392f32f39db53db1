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

#include "stfl/nn/loss.hpp"

#include <algorithm>
#include <cmath>

#include "stfl/errors.hpp"

namespace stfl {

LossResult BceLoss(const Matrix2D& predictions, const Matrix2D& labels) {
  if (!predictions.SameShape(labels)) {
    throw ShapeError("BceLoss: predictions " + predictions.ShapeString() +
                     " vs labels " + labels.ShapeString());
  }
  if (predictions.empty()) throw ValidationError("BceLoss: empty batch");
  LossResult result{0.0, Matrix2D(predictions.rows(), predictions.cols())};
  const double count = static_cast<double>(predictions.size());
  auto p = predictions.values();
  auto y = labels.values();
  auto g = result.gradient.values();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (y[i] != 0.0 && y[i] != 1.0) {
      throw ValidationError("BceLoss: label " + std::to_string(y[i]) +
                            " is not in {0, 1}");
    }
    if (!std::isfinite(p[i])) throw ValidationError("BceLoss: non-finite prediction");
    const double q = std::clamp(p[i], kBceClamp, 1.0 - kBceClamp);
    result.value -= y[i] == 1.0 ? std::log(q) : std::log1p(-q);
    g[i] = (q - y[i]) / (q * (1.0 - q)) / count;
  }
  result.value /= count;
  return result;
}

LossResult SquaredErrorLoss(const Matrix2D& predictions, const Matrix2D& targets) {
  if (!predictions.SameShape(targets)) {
    throw ShapeError("SquaredErrorLoss: predictions " + predictions.ShapeString() +
                     " vs targets " + targets.ShapeString());
  }
  if (predictions.rows() == 0) throw ValidationError("SquaredErrorLoss: empty batch");
  const double rows = static_cast<double>(predictions.rows());
  LossResult result{0.0, Matrix2D(predictions.rows(), predictions.cols())};
  auto p = predictions.values();
  auto t = targets.values();
  auto g = result.gradient.values();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double diff = p[i] - t[i];
    result.value += diff * diff;
    g[i] = 2.0 * diff / rows;
  }
  result.value /= rows;
  return result;
}

}  // namespace stfl
