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

#ifndef STFL_VAE_VAE_HPP_
#define STFL_VAE_VAE_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "stfl/io/bytes.hpp"
#include "stfl/nn/adam.hpp"
#include "stfl/nn/matrix.hpp"
#include "stfl/nn/mlp.hpp"
#include "stfl/nn/rng.hpp"

namespace stfl {

// Hidden width is five times the input width, latent width half of it (floor).
struct VaeSizing {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  std::size_t latent_dim = 0;

  static VaeSizing ForInput(std::size_t input_dim);
};

// Encoder emits 2 * latent_dim columns: mean first, then log-variance.
struct VaeModel {
  MlpModel encoder;
  MlpModel decoder;
  std::size_t latent_dim = 0;

  std::size_t input_dim() const { return encoder.input_dim(); }
  void Validate() const;

  friend bool operator==(const VaeModel&, const VaeModel&) = default;
};

// Encoder: in -> hidden (tanh) -> 2*latent (identity).
// Decoder: latent -> hidden (tanh) -> in (identity). Parameters are zero.
VaeModel MakeVae(const VaeSizing& sizing);
void InitializeGlorot(VaeModel& model, Rng& rng);

struct Posterior {
  Matrix2D mu;
  Matrix2D logvar;
};

Posterior Encode(const VaeModel& model, const Matrix2D& x);

// z = mu + exp(logvar / 2) * noise
Matrix2D Reparameterize(const Matrix2D& mu, const Matrix2D& logvar,
                        const Matrix2D& noise);

// KL(N(mu, exp(logvar)) || N(0, I)), summed over latent dimensions and
// averaged over rows.
double KlToStandardNormal(const Matrix2D& mu, const Matrix2D& logvar);

struct VaeLossResult {
  double total = 0.0;
  double kl = 0.0;
  double recon = 0.0;  // mean over rows of the summed squared error
  MlpGradients encoder_gradients;
  MlpGradients decoder_gradients;
};

VaeLossResult VaeLoss(const VaeModel& model, const Matrix2D& x, const Matrix2D& noise);

struct VaeEpochStats {
  double total = 0.0;
  double kl = 0.0;
  double recon = 0.0;
};

struct VaeTrainResult {
  VaeModel model;
  std::vector<VaeEpochStats> history;  // one entry per epoch, row-weighted means
};

using VaeEpochCallback = std::function<void(std::size_t epoch, const VaeEpochStats&)>;

// Seeded end to end: initialization, shuffling and reparameterization noise
// derive from config.seed, so equal inputs give bit-identical models.
VaeTrainResult TrainVae(const Matrix2D& data, const VaeSizing& sizing,
                        const TrainConfig& config,
                        const VaeEpochCallback& on_epoch = {});

struct LatentGaussianity {
  std::vector<double> mean;
  std::vector<double> variance;
  // Sum over latent dimensions of KL(N(mean_j, variance_j) || N(0, 1)).
  double aggregate = 0.0;
};

// Moments of sampled latents mu + sigma * noise over the rows of `data`.
LatentGaussianity MeasureLatentGaussianity(const VaeModel& model, const Matrix2D& data,
                                           std::uint64_t noise_seed);
// Same statistic for a matrix of already-sampled latents.
LatentGaussianity MeasureGaussianity(const Matrix2D& samples);

// SHA-256 over layer shapes, activation codes and parameter bytes, hex encoded.
std::string ParameterFingerprint(const MlpModel& model);
std::string ParameterFingerprint(const VaeModel& model);

// Binary model file: "STFLVAE" magic, u8 version, u32 latent width, the encoder
// and decoder (u32 layer count, then per layer u32 in, u32 out, u8 activation,
// followed by all weights and biases as little-endian f64), and finally the
// 32-byte fingerprint. Load rejects files whose fingerprint does not match.
void SaveVae(const VaeModel& model, const std::filesystem::path& path);
VaeModel LoadVae(const std::filesystem::path& path);
Bytes SerializeVae(const VaeModel& model);
VaeModel DeserializeVae(std::span<const std::uint8_t> bytes);

}  // namespace stfl

#endif  // STFL_VAE_VAE_HPP_
