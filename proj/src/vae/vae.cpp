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

#include "stfl/vae/vae.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "stfl/crypto/sha256.hpp"
#include "stfl/errors.hpp"
#include "stfl/nn/loss.hpp"

namespace stfl {
namespace {

constexpr std::string_view kMagic = "STFLVAE";
constexpr std::uint8_t kFormatVersion = 1;

void WriteMlp(ByteWriter& out, const MlpModel& model) {
  out.U32Le(static_cast<std::uint32_t>(model.layers.size()));
  for (const auto& layer : model.layers) {
    out.U32Le(static_cast<std::uint32_t>(layer.in_dim()));
    out.U32Le(static_cast<std::uint32_t>(layer.out_dim()));
    out.U8(static_cast<std::uint8_t>(layer.activation));
  }
  for (const auto& layer : model.layers) {
    for (double w : layer.weights.values()) out.F64Le(w);
    for (double b : layer.bias) out.F64Le(b);
  }
}

MlpModel ReadMlp(ByteReader& in) {
  const std::uint32_t count = in.U32Le();
  if (count == 0 || count > 64) throw ValidationError("model file: bad layer count");
  MlpModel model;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t in_dim = in.U32Le();
    const std::uint32_t out_dim = in.U32Le();
    const std::uint8_t code = in.U8();
    if (code > static_cast<std::uint8_t>(Activation::kSoftmax)) {
      throw ValidationError("model file: unknown activation code " + std::to_string(code));
    }
    model.layers.push_back({Matrix2D(out_dim, in_dim),
                            std::vector<double>(out_dim, 0.0),
                            static_cast<Activation>(code)});
  }
  for (auto& layer : model.layers) {
    for (double& w : layer.weights.values()) w = in.F64Le();
    for (double& b : layer.bias) b = in.F64Le();
  }
  model.Validate();
  return model;
}

Bytes VaeBody(const VaeModel& model) {
  ByteWriter out;
  out.U32Le(static_cast<std::uint32_t>(model.latent_dim));
  WriteMlp(out, model.encoder);
  WriteMlp(out, model.decoder);
  return out.Take();
}

}  // namespace

VaeSizing VaeSizing::ForInput(std::size_t input_dim) {
  return {input_dim, 5 * input_dim, input_dim / 2};
}

void VaeModel::Validate() const {
  encoder.Validate();
  decoder.Validate();
  if (latent_dim == 0) throw ContractError("VaeModel: latent width is zero");
  if (encoder.output_dim() != 2 * latent_dim) {
    throw ShapeError("VaeModel: encoder emits " + std::to_string(encoder.output_dim()) +
                     " columns, expected 2 * " + std::to_string(latent_dim));
  }
  if (decoder.input_dim() != latent_dim) {
    throw ShapeError("VaeModel: decoder input width != latent width");
  }
  if (decoder.output_dim() != encoder.input_dim()) {
    throw ShapeError("VaeModel: decoder output width != encoder input width");
  }
}

VaeModel MakeVae(const VaeSizing& sizing) {
  if (sizing.input_dim == 0 || sizing.latent_dim == 0 || sizing.hidden_dim == 0) {
    throw ValidationError("MakeVae: input of width " + std::to_string(sizing.input_dim) +
                          " leaves no latent dimensions");
  }
  const std::array<LayerSpec, 2> encoder = {
      LayerSpec{sizing.hidden_dim, Activation::kTanh},
      LayerSpec{2 * sizing.latent_dim, Activation::kIdentity}};
  const std::array<LayerSpec, 2> decoder = {
      LayerSpec{sizing.hidden_dim, Activation::kTanh},
      LayerSpec{sizing.input_dim, Activation::kIdentity}};
  VaeModel model{MakeMlp(sizing.input_dim, encoder), MakeMlp(sizing.latent_dim, decoder),
                 sizing.latent_dim};
  model.Validate();
  return model;
}

void InitializeGlorot(VaeModel& model, Rng& rng) {
  InitializeGlorot(model.encoder, rng);
  InitializeGlorot(model.decoder, rng);
}

Posterior Encode(const VaeModel& model, const Matrix2D& x) {
  if (x.cols() != model.input_dim()) {
    throw ShapeError("Encode: expected " + std::to_string(model.input_dim()) +
                     " features, got " + x.ShapeString());
  }
  const Matrix2D out = Predict(model.encoder, x);
  return {out.Columns(0, model.latent_dim), out.Columns(model.latent_dim, model.latent_dim)};
}

Matrix2D Reparameterize(const Matrix2D& mu, const Matrix2D& logvar,
                        const Matrix2D& noise) {
  if (!mu.SameShape(logvar) || !mu.SameShape(noise)) {
    throw ShapeError("Reparameterize: mu " + mu.ShapeString() + ", logvar " +
                     logvar.ShapeString() + ", noise " + noise.ShapeString());
  }
  Matrix2D z = mu;
  auto out = z.values();
  auto lv = logvar.values();
  auto eps = noise.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += std::exp(0.5 * lv[i]) * eps[i];
  return z;
}

double KlToStandardNormal(const Matrix2D& mu, const Matrix2D& logvar) {
  if (!mu.SameShape(logvar)) throw ShapeError("KlToStandardNormal: shape mismatch");
  if (mu.rows() == 0) return 0.0;
  double total = 0.0;
  auto m = mu.values();
  auto lv = logvar.values();
  for (std::size_t i = 0; i < m.size(); ++i) {
    // expm1(lv) - lv keeps the (0, 0) case exactly zero.
    total += 0.5 * (m[i] * m[i] + std::expm1(lv[i]) - lv[i]);
  }
  return total / static_cast<double>(mu.rows());
}

VaeLossResult VaeLoss(const VaeModel& model, const Matrix2D& x, const Matrix2D& noise) {
  if (x.cols() != model.input_dim()) {
    throw ShapeError("VaeLoss: expected " + std::to_string(model.input_dim()) +
                     " features, got " + x.ShapeString());
  }
  const std::size_t nz = model.latent_dim;
  if (noise.rows() != x.rows() || noise.cols() != nz) {
    throw ShapeError("VaeLoss: noise must be " + std::to_string(x.rows()) + "x" +
                     std::to_string(nz));
  }
  const double rows = static_cast<double>(x.rows());

  auto enc = Forward(model.encoder, x);
  const Matrix2D mu = enc.output.Columns(0, nz);
  const Matrix2D logvar = enc.output.Columns(nz, nz);
  const Matrix2D z = Reparameterize(mu, logvar, noise);
  auto dec = Forward(model.decoder, z);
  const LossResult recon = SquaredErrorLoss(dec.output, x);

  VaeLossResult result;
  result.kl = KlToStandardNormal(mu, logvar);
  result.recon = recon.value;
  result.total = result.kl + result.recon;
  result.decoder_gradients = Backward(model.decoder, dec.cache, recon.gradient);

  const Matrix2D& dz = result.decoder_gradients.input;
  Matrix2D d_enc(x.rows(), 2 * nz);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t j = 0; j < nz; ++j) {
      const double lv = logvar(r, j);
      const double sigma = std::exp(0.5 * lv);
      d_enc(r, j) = dz(r, j) + mu(r, j) / rows;
      d_enc(r, nz + j) =
          dz(r, j) * noise(r, j) * 0.5 * sigma + 0.5 * std::expm1(lv) / rows;
    }
  }
  result.encoder_gradients = Backward(model.encoder, enc.cache, d_enc);
  return result;
}

VaeTrainResult TrainVae(const Matrix2D& data, const VaeSizing& sizing,
                        const TrainConfig& config, const VaeEpochCallback& on_epoch) {
  config.Validate();
  if (data.rows() == 0) throw ValidationError("TrainVae: empty training set");
  if (data.cols() != sizing.input_dim) {
    throw ShapeError("TrainVae: data has " + std::to_string(data.cols()) +
                     " columns, sizing expects " + std::to_string(sizing.input_dim));
  }
  if (!data.AllFinite()) throw ValidationError("TrainVae: non-finite input");

  VaeTrainResult result;
  result.model = MakeVae(sizing);
  Rng init_rng(Rng::Derive(config.seed, 1));
  Rng shuffle_rng(Rng::Derive(config.seed, 2));
  Rng noise_rng(Rng::Derive(config.seed, 3));
  InitializeGlorot(result.model, init_rng);

  AdamState adam;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    VaeEpochStats stats;
    for (const auto& batch : ShuffledBatches(data.rows(), config.batch_size, shuffle_rng)) {
      const Matrix2D x = data.SelectRows(batch);
      Matrix2D noise(x.rows(), sizing.latent_dim);
      for (double& e : noise.values()) e = noise_rng.Normal();
      VaeLossResult loss = VaeLoss(result.model, x, noise);
      if (!std::isfinite(loss.total)) {
        throw NumericalError("TrainVae: non-finite loss at epoch " +
                             std::to_string(epoch + 1) + " (kl=" +
                             std::to_string(loss.kl) + ", recon=" +
                             std::to_string(loss.recon) + ")");
      }
      const double weight = static_cast<double>(x.rows()) / static_cast<double>(data.rows());
      stats.total += weight * loss.total;
      stats.kl += weight * loss.kl;
      stats.recon += weight * loss.recon;

      auto params = ParameterViews(result.model.encoder);
      auto dec_params = ParameterViews(result.model.decoder);
      params.insert(params.end(), dec_params.begin(), dec_params.end());
      auto grads = GradientViews(loss.encoder_gradients);
      auto dec_grads = GradientViews(loss.decoder_gradients);
      grads.insert(grads.end(), dec_grads.begin(), dec_grads.end());
      AdamStep(params, grads, adam, config.learning_rate);
    }
    result.history.push_back(stats);
    if (on_epoch) on_epoch(epoch + 1, stats);
  }
  return result;
}

LatentGaussianity MeasureGaussianity(const Matrix2D& samples) {
  LatentGaussianity stats;
  const std::size_t n = samples.rows();
  if (n == 0) throw ValidationError("MeasureGaussianity: no samples");
  stats.mean.assign(samples.cols(), 0.0);
  stats.variance.assign(samples.cols(), 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < samples.cols(); ++j) stats.mean[j] += samples(r, j);
  }
  for (double& m : stats.mean) m /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < samples.cols(); ++j) {
      const double d = samples(r, j) - stats.mean[j];
      stats.variance[j] += d * d;
    }
  }
  for (std::size_t j = 0; j < samples.cols(); ++j) {
    stats.variance[j] /= static_cast<double>(n);
    const double v = std::max(stats.variance[j], 1e-300);
    const double m = stats.mean[j];
    stats.aggregate += 0.5 * (m * m + v - std::log(v) - 1.0);
  }
  return stats;
}

LatentGaussianity MeasureLatentGaussianity(const VaeModel& model, const Matrix2D& data,
                                           std::uint64_t noise_seed) {
  const Posterior posterior = Encode(model, data);
  Rng rng(noise_seed);
  Matrix2D noise(posterior.mu.rows(), posterior.mu.cols());
  for (double& e : noise.values()) e = rng.Normal();
  return MeasureGaussianity(Reparameterize(posterior.mu, posterior.logvar, noise));
}

std::string ParameterFingerprint(const MlpModel& model) {
  ByteWriter out;
  WriteMlp(out, model);
  return ToHex(Sha256Of(out.bytes()));
}

std::string ParameterFingerprint(const VaeModel& model) {
  return ToHex(Sha256Of(VaeBody(model)));
}

Bytes SerializeVae(const VaeModel& model) {
  model.Validate();
  ByteWriter out;
  out.Raw(kMagic);
  out.U8(kFormatVersion);
  const Bytes body = VaeBody(model);
  out.Raw(body);
  out.Raw(Sha256Of(body));
  return out.Take();
}

VaeModel DeserializeVae(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  if (in.remaining() < kMagic.size() + 1 || in.String(kMagic.size()) != kMagic) {
    throw ValidationError("model file: bad magic");
  }
  const std::uint8_t version = in.U8();
  if (version != kFormatVersion) {
    throw ValidationError("model file: unsupported version " + std::to_string(version));
  }
  const std::size_t body_begin = kMagic.size() + 1;
  VaeModel model;
  model.latent_dim = in.U32Le();
  model.encoder = ReadMlp(in);
  model.decoder = ReadMlp(in);
  const std::size_t body_end = bytes.size() - in.remaining();
  const auto stored = in.Take(32);
  if (!in.done()) throw ValidationError("model file: trailing bytes");
  const Digest actual = Sha256Of(bytes.subspan(body_begin, body_end - body_begin));
  if (!std::equal(stored.begin(), stored.end(), actual.begin())) {
    throw ValidationError("model file: fingerprint mismatch");
  }
  model.Validate();
  return model;
}

void SaveVae(const VaeModel& model, const std::filesystem::path& path) {
  const Bytes bytes = SerializeVae(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

VaeModel LoadVae(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  const Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return DeserializeVae(bytes);
}

}  // namespace stfl
