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

#include "stfl/nn/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stfl/errors.hpp"

namespace stfl {

std::string_view ActivationName(Activation activation) {
  switch (activation) {
    case Activation::kIdentity: return "identity";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kReLU: return "relu";
    case Activation::kTanh: return "tanh";
    case Activation::kSoftmax: return "softmax";
  }
  return "unknown";
}

Matrix2D SoftmaxRows(const Matrix2D& logits) {
  if (!logits.AllFinite()) throw ValidationError("SoftmaxRows: non-finite logit");
  Matrix2D out = logits;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    const double peak = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (double& v : row) {
      v = std::exp(v - peak);
      total += v;
    }
    for (double& v : row) v /= total;
  }
  return out;
}

void ApplyActivation(Activation activation, Matrix2D& values) {
  switch (activation) {
    case Activation::kIdentity:
      return;
    case Activation::kSigmoid:
      for (double& v : values.values()) {
        // Branching keeps exp() from overflowing for large |v|.
        v = v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
      }
      return;
    case Activation::kReLU:
      for (double& v : values.values()) v = std::max(v, 0.0);
      return;
    case Activation::kTanh:
      for (double& v : values.values()) v = std::tanh(v);
      return;
    case Activation::kSoftmax:
      values = SoftmaxRows(values);
      return;
  }
}

double ActivationDerivative(Activation activation, double pre, double post) {
  switch (activation) {
    case Activation::kIdentity: return 1.0;
    case Activation::kSigmoid: return post * (1.0 - post);
    case Activation::kReLU: return pre > 0.0 ? 1.0 : 0.0;
    case Activation::kTanh: return 1.0 - post * post;
    case Activation::kSoftmax: break;
  }
  throw ContractError("ActivationDerivative: softmax has no elementwise derivative");
}

std::size_t MlpModel::input_dim() const {
  return layers.empty() ? 0 : layers.front().in_dim();
}

std::size_t MlpModel::output_dim() const {
  return layers.empty() ? 0 : layers.back().out_dim();
}

std::size_t MlpModel::parameter_count() const {
  std::size_t total = 0;
  for (const auto& layer : layers) total += layer.weights.size() + layer.bias.size();
  return total;
}

void MlpModel::Validate() const {
  if (layers.empty()) throw ContractError("MlpModel: no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& layer = layers[i];
    if (layer.bias.size() != layer.out_dim()) {
      throw ShapeError("MlpModel: layer " + std::to_string(i) + " bias length " +
                       std::to_string(layer.bias.size()) + " != " +
                       std::to_string(layer.out_dim()));
    }
    if (i + 1 < layers.size()) {
      if (layer.activation == Activation::kSoftmax) {
        throw ContractError("MlpModel: softmax only allowed on the final layer");
      }
      if (layers[i + 1].in_dim() != layer.out_dim()) {
        throw ShapeError("MlpModel: layer " + std::to_string(i + 1) + " expects " +
                         std::to_string(layers[i + 1].in_dim()) + " inputs, got " +
                         std::to_string(layer.out_dim()));
      }
    }
  }
}

MlpModel MakeMlp(std::size_t input_dim, std::span<const LayerSpec> layers) {
  MlpModel model;
  std::size_t in = input_dim;
  for (const auto& spec : layers) {
    model.layers.push_back(
        {Matrix2D(spec.units, in), std::vector<double>(spec.units, 0.0), spec.activation});
    in = spec.units;
  }
  model.Validate();
  return model;
}

void InitializeGlorot(MlpModel& model, Rng& rng) {
  for (auto& layer : model.layers) {
    const double limit =
        std::sqrt(6.0 / static_cast<double>(layer.in_dim() + layer.out_dim()));
    for (double& w : layer.weights.values()) w = rng.Uniform(-limit, limit);
    std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
  }
}

namespace {

Matrix2D AffineForward(const DenseLayer& layer, const Matrix2D& input) {
  Matrix2D pre = MatMulTransB(input, layer.weights);
  for (std::size_t r = 0; r < pre.rows(); ++r) {
    auto row = pre.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += layer.bias[c];
  }
  return pre;
}

void CheckInput(const MlpModel& model, const Matrix2D& batch) {
  if (model.layers.empty()) throw ContractError("Forward: model has no layers");
  if (batch.cols() != model.input_dim()) {
    throw ShapeError("Forward: layer 0 expects " + std::to_string(model.input_dim()) +
                     " inputs, batch is " + batch.ShapeString());
  }
}

}  // namespace

ForwardResult Forward(const MlpModel& model, const Matrix2D& batch) {
  CheckInput(model, batch);
  ForwardResult result;
  auto& cache = result.cache;
  Matrix2D current = batch;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto& layer = model.layers[i];
    if (current.cols() != layer.in_dim()) {
      throw ShapeError("Forward: shape mismatch at layer " + std::to_string(i));
    }
    Matrix2D pre = AffineForward(layer, current);
    Matrix2D post = pre;
    ApplyActivation(layer.activation, post);
    cache.inputs.push_back(std::move(current));
    cache.pre_activations.push_back(std::move(pre));
    current = post;
    cache.activations.push_back(std::move(post));
  }
  if (!current.AllFinite()) throw NumericalError("Forward: non-finite output");
  result.output = std::move(current);
  return result;
}

Matrix2D Predict(const MlpModel& model, const Matrix2D& batch) {
  CheckInput(model, batch);
  Matrix2D current = batch;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    if (current.cols() != model.layers[i].in_dim()) {
      throw ShapeError("Predict: shape mismatch at layer " + std::to_string(i));
    }
    current = AffineForward(model.layers[i], current);
    ApplyActivation(model.layers[i].activation, current);
  }
  if (!current.AllFinite()) throw NumericalError("Predict: non-finite output");
  return current;
}

MlpGradients Backward(const MlpModel& model, const ForwardCache& cache,
                      const Matrix2D& output_gradient) {
  const std::size_t n = model.layers.size();
  if (cache.inputs.size() != n || cache.activations.size() != n ||
      cache.pre_activations.size() != n) {
    throw ContractError("Backward: cache has " + std::to_string(cache.inputs.size()) +
                        " layers, model has " + std::to_string(n));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& layer = model.layers[i];
    if (cache.inputs[i].cols() != layer.in_dim() ||
        cache.activations[i].cols() != layer.out_dim() ||
        cache.inputs[i].rows() != cache.inputs[0].rows()) {
      throw ContractError("Backward: cache does not match model at layer " +
                          std::to_string(i));
    }
  }
  if (!output_gradient.SameShape(cache.output())) {
    throw ContractError("Backward: output gradient " + output_gradient.ShapeString() +
                        " vs output " + cache.output().ShapeString());
  }

  MlpGradients grads;
  grads.layers.resize(n);
  Matrix2D upstream = output_gradient;
  for (std::size_t i = n; i-- > 0;) {
    const auto& layer = model.layers[i];
    const Matrix2D& pre = cache.pre_activations[i];
    const Matrix2D& post = cache.activations[i];
    Matrix2D local = upstream;
    if (layer.activation == Activation::kSoftmax) {
      for (std::size_t r = 0; r < local.rows(); ++r) {
        auto g = local.row(r);
        auto y = post.row(r);
        double dot = 0.0;
        for (std::size_t c = 0; c < g.size(); ++c) dot += g[c] * y[c];
        for (std::size_t c = 0; c < g.size(); ++c) g[c] = y[c] * (g[c] - dot);
      }
    } else if (layer.activation != Activation::kIdentity) {
      auto g = local.values();
      auto p = pre.values();
      auto q = post.values();
      for (std::size_t k = 0; k < g.size(); ++k) {
        g[k] *= ActivationDerivative(layer.activation, p[k], q[k]);
      }
    }
    auto& lg = grads.layers[i];
    lg.weights = MatMulTransA(local, cache.inputs[i]);
    lg.bias.assign(layer.out_dim(), 0.0);
    for (std::size_t r = 0; r < local.rows(); ++r) {
      auto row = local.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) lg.bias[c] += row[c];
    }
    upstream = MatMul(local, layer.weights);
  }
  grads.input = std::move(upstream);
  return grads;
}

MlpGradients ZeroGradients(const MlpModel& model) {
  MlpGradients grads;
  for (const auto& layer : model.layers) {
    grads.layers.push_back({Matrix2D(layer.out_dim(), layer.in_dim()),
                            std::vector<double>(layer.out_dim(), 0.0)});
  }
  return grads;
}

void AddGradients(MlpGradients& into, const MlpGradients& other) {
  if (into.layers.size() != other.layers.size()) {
    throw ShapeError("AddGradients: layer count differs");
  }
  for (std::size_t i = 0; i < into.layers.size(); ++i) {
    into.layers[i].weights += other.layers[i].weights;
    auto& b = into.layers[i].bias;
    const auto& ob = other.layers[i].bias;
    if (b.size() != ob.size()) throw ShapeError("AddGradients: bias length differs");
    for (std::size_t k = 0; k < b.size(); ++k) b[k] += ob[k];
  }
}

std::vector<std::span<double>> ParameterViews(MlpModel& model) {
  std::vector<std::span<double>> views;
  for (auto& layer : model.layers) {
    views.push_back(layer.weights.values());
    views.push_back(layer.bias);
  }
  return views;
}

std::vector<std::span<const double>> GradientViews(const MlpGradients& gradients) {
  std::vector<std::span<const double>> views;
  for (const auto& layer : gradients.layers) {
    views.push_back(layer.weights.values());
    views.push_back(layer.bias);
  }
  return views;
}

}  // namespace stfl
