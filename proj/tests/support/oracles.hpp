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

// Independent reference computations used as test oracles. Nothing here calls
// into the code paths under test except for building inputs.
#ifndef STFL_TESTS_SUPPORT_ORACLES_HPP_
#define STFL_TESTS_SUPPORT_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "stfl/nn/matrix.hpp"
#include "stfl/nn/rng.hpp"

namespace stfl::testing {

inline Matrix2D RandomMatrix(std::size_t rows, std::size_t cols, Rng& rng,
                             double lo = -1.0, double hi = 1.0) {
  Matrix2D m(rows, cols);
  for (double& v : m.values()) v = rng.Uniform(lo, hi);
  return m;
}

// Plain triple loop, row-major indexing by hand.
inline std::vector<double> NaiveMatMul(const std::vector<double>& a, std::size_t n,
                                       std::size_t k, const std::vector<double>& b,
                                       std::size_t m) {
  std::vector<double> out(n * m, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t t = 0; t < k; ++t) out[i * m + j] += a[i * k + t] * b[t * m + j];
  return out;
}

inline double CentralDifference(const std::function<double(double)>& f, double x,
                                double h = 1e-5) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Perturbs `parameter` in place and restores it.
inline double CentralDifferenceAt(double& parameter, const std::function<double()>& loss,
                                  double h = 1e-5) {
  const double saved = parameter;
  parameter = saved + h;
  const double up = loss();
  parameter = saved - h;
  const double down = loss();
  parameter = saved;
  return (up - down) / (2.0 * h);
}

inline double RelativeError(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Composite Simpson integration on [lo, hi] with an even number of panels.
inline double Simpson(const std::function<double(double)>& f, double lo, double hi,
                      int panels) {
  const double h = (hi - lo) / panels;
  double total = f(lo) + f(hi);
  for (int i = 1; i < panels; ++i) total += f(lo + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return total * h / 3.0;
}

}  // namespace stfl::testing

#endif  // STFL_TESTS_SUPPORT_ORACLES_HPP_
