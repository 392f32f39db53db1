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

#include "stfl/baseline/vfl.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <thread>

#include "stfl/errors.hpp"
#include "stfl/nn/adam.hpp"
#include "stfl/nn/loss.hpp"

namespace stfl {
namespace {

constexpr std::uint64_t kGuestInitSalt = 21;
constexpr std::uint64_t kHostInitSalt = 22;
constexpr std::uint64_t kLocalInitSalt = 23;
constexpr std::uint64_t kGuestNoiseSalt = 31;
constexpr std::uint64_t kHostNoiseSalt = 32;
constexpr std::uint64_t kEncryptSalt = 33;
constexpr std::uint64_t kKeySalt = 34;
constexpr std::uint64_t kBatchSalt = 35;

constexpr std::uint8_t kModeTrain = 0;
constexpr std::uint8_t kModePredict = 1;

// Uniform in [-1, 1), or zeros when masking is disabled.
Matrix2D Mask(std::size_t rows, std::size_t cols, Rng& rng, bool enabled) {
  Matrix2D m(rows, cols);
  if (enabled) {
    for (double& v : m.values()) v = rng.Uniform(-1.0, 1.0);
  }
  return m;
}

Matrix2D Targets(OutputHead head, const Matrix2D& labels) {
  if (labels.cols() != 1) throw ShapeError("baseline: labels must be a column");
  if (head == OutputHead::kSigmoid) return labels;
  Matrix2D onehot(labels.rows(), 2);
  for (std::size_t r = 0; r < labels.rows(); ++r) {
    onehot(r, labels(r, 0) == 1.0 ? 1 : 0) = 1.0;
  }
  return onehot;
}

void SgdUpdate(MlpModel& model, const MlpGradients& grads, double lr) {
  SgdStep(ParameterViews(model), GradientViews(grads), lr);
}

Bytes EncodeRequest(std::uint8_t mode, std::span<const std::string> ids) {
  ByteWriter out;
  out.U8(mode);
  WriteIds(out, ids);
  return out.Take();
}

Bytes EncodeKeyAnnouncement(const PaillierPublicKey& key, std::size_t width) {
  ByteWriter out;
  const std::string text = SerializePublicKey(key);
  out.U32Le(static_cast<std::uint32_t>(text.size()));
  out.Raw(text);
  out.U32Le(static_cast<std::uint32_t>(width));
  return out.Take();
}

}  // namespace

void BaselineConfig::Validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("baseline: learning rate must be positive");
  }
  if (batch_size == 0 || epochs == 0) throw ValidationError("baseline: batch size and epochs must be positive");
  if (guest_hidden_multiplier == 0) throw ValidationError("baseline: guest width multiplier is zero");
  if (fractional_bits < 8 || fractional_bits > 64) {
    throw ValidationError("baseline: fractional bits outside [8, 64]");
  }
  if (key_bits != 512 && key_bits != 1024 && key_bits != 2048) {
    throw ValidationError("baseline: key size must be 512, 1024 or 2048 bits");
  }
}

BaselineInit InitializeBaseline(std::size_t guest_features, std::size_t host_features,
                                const BaselineConfig& config) {
  config.Validate();
  if (guest_features == 0 || host_features == 0) {
    throw ValidationError("baseline: both parties need at least one feature");
  }
  const std::size_t m = config.guest_hidden_multiplier * guest_features;
  const std::size_t c = config.outputs();
  BaselineInit init;
  const LayerSpec bottom[] = {{m, Activation::kTanh}};
  init.guest_bottom = MakeMlp(guest_features, bottom);
  Rng guest_rng(Rng::Derive(config.seed, kGuestInitSalt));
  InitializeGlorot(init.guest_bottom, guest_rng);

  const LayerSpec interactive[] = {{c, Activation::kIdentity}};
  MlpModel top = MakeMlp(m, interactive);
  Rng host_rng(Rng::Derive(config.seed, kHostInitSalt));
  InitializeGlorot(top, host_rng);
  init.host_weights = top.layers[0].weights;

  init.host_local = MakeMlp(host_features, interactive);
  Rng local_rng(Rng::Derive(config.seed, kLocalInitSalt));
  InitializeGlorot(init.host_local, local_rng);
  return init;
}

Bytes EncodeCipherMatrix(const CipherMatrix& m) {
  if (m.cells.size() != m.rows * m.cols) throw ShapeError("cipher matrix: cell count mismatch");
  ByteWriter out;
  out.U32Le(static_cast<std::uint32_t>(m.rows));
  out.U32Le(static_cast<std::uint32_t>(m.cols));
  out.U64Le(m.cells.empty() ? 0 : m.cells.front().key_fingerprint);
  std::vector<mpz_class> values;
  values.reserve(m.cells.size());
  for (const auto& c : m.cells) values.push_back(c.value);
  WriteBigInts(out, values);
  for (const auto& c : m.cells) {
    out.U32Le(static_cast<std::uint32_t>(c.scale_bits));
    out.F64Le(c.magnitude_bound);
  }
  return out.Take();
}

CipherMatrix DecodeCipherMatrix(std::span<const std::uint8_t> bytes,
                                const PaillierPublicKey& expected_key) {
  ByteReader in(bytes);
  CipherMatrix m;
  m.rows = in.U32Le();
  m.cols = in.U32Le();
  const std::uint64_t fingerprint = in.U64Le();
  auto values = ReadBigInts(in);
  if (values.size() != m.rows * m.cols) throw ProtocolError("cipher matrix: cell count mismatch");
  if (!values.empty() && fingerprint != expected_key.fingerprint) {
    throw CryptoError("cipher matrix encrypted under a different key");
  }
  m.cells.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] < 0 || values[i] >= expected_key.n_squared) {
      throw ProtocolError("cipher matrix: ciphertext outside [0, n^2)");
    }
    m.cells[i].value = std::move(values[i]);
    m.cells[i].key_fingerprint = fingerprint;
    m.cells[i].scale_bits = static_cast<int>(in.U32Le());
    m.cells[i].magnitude_bound = in.F64Le();
  }
  if (!in.done()) throw ProtocolError("cipher matrix: trailing bytes");
  return m;
}

Matrix2D HeadProbabilities(OutputHead head, const Matrix2D& logits) {
  if (head == OutputHead::kSoftmax) return SoftmaxRows(logits);
  Matrix2D p = logits;
  ApplyActivation(Activation::kSigmoid, p);
  return p;
}

Matrix2D HeadGradient(OutputHead head, const Matrix2D& probabilities, const Matrix2D& labels) {
  Matrix2D delta = probabilities - Targets(head, labels);
  delta *= 1.0 / static_cast<double>(probabilities.rows());
  return delta;
}

double HeadLoss(OutputHead head, const Matrix2D& probabilities, const Matrix2D& labels) {
  if (head == OutputHead::kSigmoid) return BceLoss(probabilities, labels).value;
  double total = 0.0;
  for (std::size_t r = 0; r < probabilities.rows(); ++r) {
    const double p = probabilities(r, labels(r, 0) == 1.0 ? 1 : 0);
    total -= std::log(std::max(p, kBceClamp));
  }
  return total / static_cast<double>(probabilities.rows());
}

Matrix2D PositiveClass(OutputHead head, const Matrix2D& probabilities) {
  return head == OutputHead::kSoftmax ? probabilities.Columns(1, 1) : probabilities;
}

// ---------------------------------------------------------------- guest

BaselineGuest::BaselineGuest(PartyDataset data, const BaselineInit& init,
                             const BaselineConfig& config)
    : data_(std::move(data)),
      config_(config),
      bottom_(init.guest_bottom),
      accumulated_noise_(init.host_weights.rows(), init.host_weights.cols()),
      noise_rng_(Rng::Derive(config.seed, kGuestNoiseSalt)),
      encrypt_rng_(Csprng::FromSeed(Rng::Derive(config.seed, kEncryptSalt))) {
  config_.Validate();
  if (bottom_.input_dim() != data_.feature_count()) {
    throw ShapeError("baseline guest: bottom model expects " +
                     std::to_string(bottom_.input_dim()) + " features, party has " +
                     std::to_string(data_.feature_count()));
  }
  Csprng key_rng = Csprng::FromSeed(Rng::Derive(config.seed, kKeySalt));
  keys_ = GeneratePaillierKeypair(config_.key_bits, key_rng);
}

void BaselineGuest::Serve(Endpoint& host) {
  try {
    ServeLoop(host);
  } catch (const std::exception& e) {
    host.SendAbort(e);
    throw;
  }
}

void BaselineGuest::ServeLoop(Endpoint& host) {
  const PaillierPublicKey& pk = keys_.public_key;
  const Control hello = DecodeControl(host.Expect(MessageType::kHello).body);
  if (hello.code != accumulated_noise_.rows()) {
    throw ProtocolError("baseline guest: host head width " + std::to_string(hello.code) +
                        " differs from " + std::to_string(accumulated_noise_.rows()));
  }
  host.Send(MessageType::kPublicKey, EncodeKeyAnnouncement(pk, bottom_.output_dim()));

  for (;;) {
    const Message message = host.Receive();
    if (message.type == MessageType::kShutdown) {
      host.Send(MessageType::kAck);
      return;
    }
    if (message.type == MessageType::kAbort) Endpoint::RethrowAbort(message);
    if (message.type != MessageType::kActivationRequest) {
      throw ProtocolError("baseline guest: unexpected " +
                          std::string(MessageTypeName(message.type)));
    }
    ByteReader request(message.body);
    const std::uint8_t mode = request.U8();
    const auto ids = ReadIds(request);

    // Forward: [a] to the host, then strip the accumulated noise from the
    // masked logits.
    const Matrix2D x = data_.FeaturesFor(ids);
    auto [a, cache] = Forward(bottom_, x);
    host.Send(MessageType::kEncryptedActivations,
              EncodeCipherMatrix(EncryptMatrix(pk, a, encrypt_rng_, config_.fractional_bits)));
    observed_.masked_logits = DecryptMatrix(
        keys_.private_key, DecodeCipherMatrix(host.Expect(MessageType::kMaskedLogits).body, pk));
    Matrix2D shares = observed_.masked_logits - MatMulTransB(a, accumulated_noise_);
    host.Send(MessageType::kLogitShares, EncodeMatrix(shares));
    if (mode == kModePredict) continue;
    if (mode != kModeTrain) throw ProtocolError("baseline guest: unknown request mode");

    // Backward: hand the host a gradient hidden behind fresh weight noise,
    // plus the encrypted accumulated noise it needs for dL/da.
    observed_.masked_gradient = DecryptMatrix(
        keys_.private_key,
        DecodeCipherMatrix(host.Expect(MessageType::kEncryptedWeightGradient).body, pk));
    const Matrix2D weight_noise = Mask(accumulated_noise_.rows(), accumulated_noise_.cols(),
                                       noise_rng_, config_.masks);
    Matrix2D reply = observed_.masked_gradient;
    for (std::size_t i = 0; i < reply.size(); ++i) {
      reply.values()[i] -= weight_noise.values()[i] / config_.learning_rate;
    }
    host.Send(MessageType::kMaskedWeightGradient, EncodeMatrix(reply));
    host.Send(MessageType::kEncryptedAccumulatedNoise,
              EncodeCipherMatrix(EncryptMatrix(pk, accumulated_noise_, encrypt_rng_,
                                               config_.fractional_bits)));
    accumulated_noise_ += weight_noise;

    const Matrix2D grad_a = DecryptMatrix(
        keys_.private_key,
        DecodeCipherMatrix(host.Expect(MessageType::kEncryptedActivationGradient).body, pk));
    SgdUpdate(bottom_, Backward(bottom_, cache, grad_a), config_.learning_rate);
    host.Send(MessageType::kAck);
  }
}

// ---------------------------------------------------------------- host

BaselineHost::BaselineHost(PartyDataset data, const BaselineInit& init,
                           const BaselineConfig& config)
    : data_(std::move(data)),
      config_(config),
      masked_weights_(init.host_weights),
      local_(init.host_local),
      noise_rng_(Rng::Derive(config.seed, kHostNoiseSalt)),
      shuffle_rng_(Rng::Derive(config.seed, kBatchSalt)) {
  config_.Validate();
  if (!data_.has_labels()) throw ValidationError("baseline host: dataset must carry labels");
  if (local_.input_dim() != data_.feature_count()) {
    throw ShapeError("baseline host: local model expects " + std::to_string(local_.input_dim()) +
                     " features, party has " + std::to_string(data_.feature_count()));
  }
}

Endpoint& BaselineHost::guest() {
  if (!guest_ || !key_) throw ContractError("baseline host: not connected");
  return *guest_;
}

void BaselineHost::Connect(Endpoint& guest) {
  guest.Send(MessageType::kHello,
             EncodeControl({static_cast<std::uint8_t>(config_.outputs()), "baseline-host"}));
  const Message reply = guest.Expect(MessageType::kPublicKey);
  ByteReader in(reply.body);
  key_ = ParsePublicKey(in.String(in.U32Le()));
  const std::size_t width = in.U32Le();
  if (width != masked_weights_.cols()) {
    throw ProtocolError("baseline host: guest activation width " + std::to_string(width) +
                        " differs from " + std::to_string(masked_weights_.cols()));
  }
  if (key_->bits != config_.key_bits) throw CryptoError("baseline host: unexpected key size");
  guest_ = &guest;
}

Matrix2D BaselineHost::ForwardRound(std::span<const std::string> ids, bool training) {
  Endpoint& g = guest();
  if (pending_) throw ProtocolError("baseline host: backward round outstanding");
  g.Send(MessageType::kActivationRequest, EncodeRequest(training ? kModeTrain : kModePredict, ids));
  activations_ = DecodeCipherMatrix(g.Expect(MessageType::kEncryptedActivations).body, *key_);
  if (activations_.rows != ids.size() || activations_.cols != masked_weights_.cols()) {
    throw ProtocolError("baseline host: activation batch has the wrong shape");
  }
  // [z_tilde] = [a] W_tilde^T, masked with a fresh eps_s before it goes back.
  const Matrix2D logit_mask = Mask(ids.size(), config_.outputs(), noise_rng_, config_.masks);
  const CipherMatrix z_tilde = CipherTimesPlain(*key_, activations_, masked_weights_.Transposed(),
                                                config_.fractional_bits);
  g.Send(MessageType::kMaskedLogits, EncodeCipherMatrix(AddPlainMatrix(*key_, z_tilde, logit_mask)));
  const Matrix2D shares = DecodeMatrix(g.Expect(MessageType::kLogitShares).body);
  if (shares.rows() != ids.size() || shares.cols() != config_.outputs()) {
    throw ProtocolError("baseline host: logit shares have the wrong shape");
  }
  host_x_ = data_.FeaturesFor(ids);
  logits_ = shares - logit_mask;
  logits_ += stfl::Predict(local_, host_x_);
  probabilities_ = HeadProbabilities(config_.head, logits_);
  pending_ = training;
  return probabilities_;
}

void BaselineHost::BackwardRound(const Matrix2D& labels) {
  Endpoint& g = guest();
  if (!pending_) throw ProtocolError("baseline host: backward round without a training forward");
  pending_ = false;
  if (labels.rows() != probabilities_.rows()) throw ShapeError("baseline host: label count");
  const Matrix2D delta = HeadGradient(config_.head, probabilities_, labels);

  // [dL/dW_h] = delta^T [a], masked with eps_s'.
  const Matrix2D gradient_mask =
      Mask(masked_weights_.rows(), masked_weights_.cols(), noise_rng_, config_.masks);
  const CipherMatrix weight_grad =
      PlainTimesCipher(*key_, delta.Transposed(), activations_, config_.fractional_bits);
  g.Send(MessageType::kEncryptedWeightGradient,
         EncodeCipherMatrix(AddPlainMatrix(*key_, weight_grad, gradient_mask)));
  Matrix2D noisy_grad = DecodeMatrix(g.Expect(MessageType::kMaskedWeightGradient).body);
  const CipherMatrix acc_noise =
      DecodeCipherMatrix(g.Expect(MessageType::kEncryptedAccumulatedNoise).body, *key_);
  if (!noisy_grad.SameShape(masked_weights_) || acc_noise.rows != masked_weights_.rows() ||
      acc_noise.cols != masked_weights_.cols()) {
    throw ProtocolError("baseline host: mask bookkeeping shapes disagree");
  }
  noisy_grad -= gradient_mask;

  // [dL/da] = delta W_tilde - delta [eps_acc], using the pre-update weights.
  const CipherMatrix grad_a = AddPlainMatrix(
      *key_, NegateMatrix(*key_, PlainTimesCipher(*key_, delta, acc_noise, config_.fractional_bits)),
      MatMul(delta, masked_weights_));
  noisy_grad *= config_.learning_rate;
  masked_weights_ -= noisy_grad;

  auto [unused, cache] = Forward(local_, host_x_);
  SgdUpdate(local_, Backward(local_, cache, delta), config_.learning_rate);

  g.Send(MessageType::kEncryptedActivationGradient, EncodeCipherMatrix(grad_a));
  g.Expect(MessageType::kAck);
}

Matrix2D BaselineHost::Predict(std::span<const std::string> ids) {
  Matrix2D out(ids.size(), 1);
  for (std::size_t begin = 0; begin < ids.size(); begin += config_.batch_size) {
    const auto chunk = ids.subspan(begin, std::min(config_.batch_size, ids.size() - begin));
    const Matrix2D p = PositiveClass(config_.head, ForwardRound(chunk, false));
    for (std::size_t r = 0; r < chunk.size(); ++r) out(begin + r, 0) = p(r, 0);
  }
  return out;
}

std::vector<BaselineEpoch> BaselineHost::Train(
    std::span<const std::string> ids, const std::function<void(const BaselineEpoch&)>& on_epoch) {
  if (ids.empty()) throw ValidationError("baseline: empty training set");
  const Matrix2D labels = data_.LabelsFor(ids);
  const double n = static_cast<double>(ids.size());
  std::vector<BaselineEpoch> history;
  for (std::size_t epoch = 1; epoch <= config_.epochs; ++epoch) {
    BaselineEpoch stats;
    stats.epoch = epoch;
    for (const auto& batch : ShuffledBatches(ids.size(), config_.batch_size, shuffle_rng_)) {
      std::vector<std::string> batch_ids;
      for (std::size_t i : batch) batch_ids.push_back(ids[i]);
      const Matrix2D y = labels.SelectRows(batch);
      const Matrix2D p = ForwardRound(batch_ids, true);
      const double loss = HeadLoss(config_.head, p, y);
      if (!std::isfinite(loss)) throw NumericalError("baseline: non-finite loss");
      stats.loss += loss * static_cast<double>(batch.size()) / n;
      const Matrix2D positive = PositiveClass(config_.head, p);
      for (std::size_t r = 0; r < batch.size(); ++r) {
        stats.accuracy += ((positive(r, 0) >= 0.5) == (y(r, 0) == 1.0)) / n;
      }
      BackwardRound(y);
    }
    history.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return history;
}

void BaselineHost::Shutdown() {
  Endpoint& g = guest();
  g.Send(MessageType::kShutdown);
  g.Expect(MessageType::kAck);
}

// ---------------------------------------------------------------- reference

BaselineReference::BaselineReference(const BaselineInit& init, const BaselineConfig& config)
    : config_(config),
      bottom_(init.guest_bottom),
      host_weights_(init.host_weights),
      local_(init.host_local) {}

Matrix2D BaselineReference::Forward(const Matrix2D& guest_x, const Matrix2D& host_x) {
  guest_x_ = guest_x;
  host_x_ = host_x;
  activations_ = stfl::Predict(bottom_, guest_x);
  logits_ = MatMulTransB(activations_, host_weights_);
  logits_ += stfl::Predict(local_, host_x);
  probabilities_ = HeadProbabilities(config_.head, logits_);
  return probabilities_;
}

Matrix2D BaselineReference::Backward(const Matrix2D& labels) {
  const Matrix2D delta = HeadGradient(config_.head, probabilities_, labels);
  const Matrix2D grad_w = MatMulTransA(delta, activations_);
  const Matrix2D grad_a = MatMul(delta, host_weights_);
  Matrix2D step = grad_w;
  step *= config_.learning_rate;
  host_weights_ -= step;
  auto local_pass = stfl::Forward(local_, host_x_);
  SgdUpdate(local_, stfl::Backward(local_, local_pass.cache, delta), config_.learning_rate);
  auto guest_pass = stfl::Forward(bottom_, guest_x_);
  SgdUpdate(bottom_, stfl::Backward(bottom_, guest_pass.cache, grad_a), config_.learning_rate);
  return grad_a;
}

// ---------------------------------------------------------------- driver

BaselineRunResult RunBaseline(const PartyDataset& host_data, const PartyDataset& guest_data,
                              const BaselineRunOptions& options) {
  const BaselineInit init =
      InitializeBaseline(guest_data.feature_count(), host_data.feature_count(), options.config);
  BaselineGuest guest(guest_data, init, options.config);
  BaselineHost host(host_data, init, options.config);
  Link link = MakeLink(options.transport, kBaselineHostId, kBaselineGuestId);
  if (options.log) {
    link.a->Attach(options.log);
    link.b->Attach(options.log);
  }
  std::exception_ptr guest_error;
  std::thread guest_thread([&] {
    try {
      guest.Serve(*link.b);
    } catch (...) {
      guest_error = std::current_exception();
    }
  });
  BaselineRunResult result;
  std::exception_ptr host_error;
  try {
    host.Connect(*link.a);
    const auto started = std::chrono::steady_clock::now();
    result.history = host.Train(options.train_ids, options.on_epoch);
    result.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (!options.predict_ids.empty()) result.predictions = host.Predict(options.predict_ids);
    host.Shutdown();
  } catch (const std::exception& e) {
    host_error = std::current_exception();
    link.a->SendAbort(e);
    link.a->Close();
  }
  guest_thread.join();
  if (host_error) std::rethrow_exception(host_error);
  if (guest_error) std::rethrow_exception(guest_error);
  return result;
}

}  // namespace stfl
