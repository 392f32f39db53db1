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

#ifndef STFL_NN_MLP_HPP_
#define STFL_NN_MLP_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "stfl/nn/matrix.hpp"
#include "stfl/nn/rng.hpp"

namespace stfl {

enum class Activation : std::uint8_t {
  kIdentity = 0,
  kSigmoid = 1,
  kReLU = 2,
  kTanh = 3,
  kSoftmax = 4,  // final layer only
};

std::string_view ActivationName(Activation activation);

// Applies an elementwise activation (or row softmax) in place.
void ApplyActivation(Activation activation, Matrix2D& values);
// Derivative of an elementwise activation, expressed through its output.
// Not defined for kSoftmax, whose Jacobian is not diagonal.
double ActivationDerivative(Activation activation, double pre, double post);

Matrix2D SoftmaxRows(const Matrix2D& logits);

struct DenseLayer {
  Matrix2D weights;  // out x in
  std::vector<double> bias;
  Activation activation = Activation::kIdentity;

  std::size_t in_dim() const { return weights.cols(); }
  std::size_t out_dim() const { return weights.rows(); }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct MlpModel {
  std::vector<DenseLayer> layers;

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t parameter_count() const;
  // Throws ShapeError/ContractError on inconsistent layer dims, bias length, or
  // a non-final softmax.
  void Validate() const;

  friend bool operator==(const MlpModel&, const MlpModel&) = default;
};

struct LayerSpec {
  std::size_t units;
  Activation activation;
};

// Builds an MLP of the given widths with zero parameters.
MlpModel MakeMlp(std::size_t input_dim, std::span<const LayerSpec> layers);
// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
void InitializeGlorot(MlpModel& model, Rng& rng);

// Per-layer inputs and outputs of one forward pass.
struct ForwardCache {
  std::vector<Matrix2D> inputs;       // inputs[i] feeds layer i
  std::vector<Matrix2D> activations;  // post-activation output of layer i
  std::vector<Matrix2D> pre_activations;

  const Matrix2D& output() const { return activations.back(); }
};

struct ForwardResult {
  Matrix2D output;
  ForwardCache cache;
};

ForwardResult Forward(const MlpModel& model, const Matrix2D& batch);
// Forward pass without keeping the cache.
Matrix2D Predict(const MlpModel& model, const Matrix2D& batch);

struct LayerGradient {
  Matrix2D weights;
  std::vector<double> bias;
};

struct MlpGradients {
  std::vector<LayerGradient> layers;
  Matrix2D input;  // dL/d(batch)
};

// Backpropagates dL/d(output). The cache must come from Forward on a model with
// identical dimensions; a mismatch throws ContractError.
MlpGradients Backward(const MlpModel& model, const ForwardCache& cache,
                      const Matrix2D& output_gradient);

MlpGradients ZeroGradients(const MlpModel& model);
void AddGradients(MlpGradients& into, const MlpGradients& other);

// Flat mutable views over all parameters, layer by layer (weights then bias).
std::vector<std::span<double>> ParameterViews(MlpModel& model);
std::vector<std::span<const double>> GradientViews(const MlpGradients& gradients);

}  // namespace stfl

#endif  // STFL_NN_MLP_HPP_
