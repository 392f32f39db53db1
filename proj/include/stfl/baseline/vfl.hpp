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

#ifndef STFL_BASELINE_VFL_HPP_
#define STFL_BASELINE_VFL_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stfl/crypto/csprng.hpp"
#include "stfl/crypto/paillier.hpp"
#include "stfl/data/dataset.hpp"
#include "stfl/net/transport.hpp"
#include "stfl/nn/classifier.hpp"
#include "stfl/nn/mlp.hpp"
#include "stfl/nn/rng.hpp"

namespace stfl {

inline constexpr std::uint8_t kBaselineHostId = 0;
inline constexpr std::uint8_t kBaselineGuestId = 1;

enum class OutputHead : std::uint8_t { kSigmoid, kSoftmax };

struct BaselineConfig {
  double learning_rate = 0.05;  // plain SGD; Adam would break the mask algebra
  std::size_t batch_size = 128;
  std::size_t epochs = 100;
  std::uint64_t seed = 0;
  std::size_t key_bits = 1024;
  OutputHead head = OutputHead::kSigmoid;
  std::size_t guest_hidden_multiplier = 5;  // guest activation width m = this * d_guest
  bool masks = true;                        // false only for degenerate-case tests
  int fractional_bits = kDefaultFractionalBits;

  void Validate() const;
  std::size_t outputs() const { return head == OutputHead::kSoftmax ? 2 : 1; }
};

// Starting parameters shared by the secure run and the plaintext reference.
// The initial host weights are a public random draw; from the first update
// on, only their masked version exists at the host.
struct BaselineInit {
  MlpModel guest_bottom;  // d_guest -> m, Tanh
  Matrix2D host_weights;  // outputs x m
  MlpModel host_local;    // d_host -> outputs, identity (host's own features + bias)
};
BaselineInit InitializeBaseline(std::size_t guest_features, std::size_t host_features,
                                const BaselineConfig& config);

// Ciphertext matrices on the wire: u32 rows, u32 cols, u64 key fingerprint,
// big-integer cells, then per cell i32 scale bits and f64 magnitude bound.
Bytes EncodeCipherMatrix(const CipherMatrix& m);
CipherMatrix DecodeCipherMatrix(std::span<const std::uint8_t> bytes,
                                const PaillierPublicKey& expected_key);

class BaselineGuest {
 public:
  BaselineGuest(PartyDataset data, const BaselineInit& init, const BaselineConfig& config);

  // Actor loop until shutdown; aborts are forwarded to the host.
  void Serve(Endpoint& host);

  const MlpModel& bottom() const { return bottom_; }
  const Matrix2D& accumulated_noise() const { return accumulated_noise_; }
  const PaillierPublicKey& public_key() const { return keys_.public_key; }

  // Decrypted values the guest has seen, for boundary tests.
  struct Observed {
    Matrix2D masked_logits;    // z_tilde + eps_s
    Matrix2D masked_gradient;  // dL/dW_h + eps_s'
  };
  const Observed& observed() const { return observed_; }

 private:
  void ServeLoop(Endpoint& host);

  PartyDataset data_;
  BaselineConfig config_;
  MlpModel bottom_;
  Matrix2D accumulated_noise_;
  PaillierKeypair keys_;
  Rng noise_rng_;
  Csprng encrypt_rng_;
  Observed observed_;
};

struct BaselineEpoch {
  std::size_t epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;
};

class BaselineHost {
 public:
  BaselineHost(PartyDataset data, const BaselineInit& init, const BaselineConfig& config);

  // Announces the output width and receives the guest's public key.
  void Connect(Endpoint& guest);

  // One forward exchange. Returns the head's probabilities (rows x outputs).
  Matrix2D ForwardRound(std::span<const std::string> ids, bool training);
  // Requires the preceding ForwardRound(ids, true); labels are y in {0, 1}.
  void BackwardRound(const Matrix2D& labels);

  // Probability of class 1 per ID.
  Matrix2D Predict(std::span<const std::string> ids);
  std::vector<BaselineEpoch> Train(std::span<const std::string> ids,
                                   const std::function<void(const BaselineEpoch&)>& on_epoch = {});
  void Shutdown();

  const Matrix2D& masked_weights() const { return masked_weights_; }
  const MlpModel& local() const { return local_; }
  const Matrix2D& last_logits() const { return logits_; }

 private:
  Endpoint& guest();

  PartyDataset data_;
  BaselineConfig config_;
  Matrix2D masked_weights_;
  MlpModel local_;
  Rng noise_rng_;
  Rng shuffle_rng_;
  std::optional<PaillierPublicKey> key_;
  Endpoint* guest_ = nullptr;
  // State of the pending training round.
  bool pending_ = false;
  Matrix2D host_x_;
  Matrix2D logits_;
  Matrix2D probabilities_;
  CipherMatrix activations_;
};

// The identical arithmetic in the clear, run in lock step for equivalence tests.
class BaselineReference {
 public:
  BaselineReference(const BaselineInit& init, const BaselineConfig& config);

  Matrix2D Forward(const Matrix2D& guest_x, const Matrix2D& host_x);
  // Returns dL/da delivered to the guest, then updates all parameters.
  Matrix2D Backward(const Matrix2D& labels);

  const Matrix2D& host_weights() const { return host_weights_; }
  const MlpModel& bottom() const { return bottom_; }
  const MlpModel& local() const { return local_; }
  const Matrix2D& last_logits() const { return logits_; }

 private:
  BaselineConfig config_;
  MlpModel bottom_;
  Matrix2D host_weights_;
  MlpModel local_;
  Matrix2D guest_x_, host_x_, activations_, logits_, probabilities_;
};

// Head helpers shared by the secure host and the reference.
Matrix2D HeadProbabilities(OutputHead head, const Matrix2D& logits);
// dL/dz for the batch mean loss.
Matrix2D HeadGradient(OutputHead head, const Matrix2D& probabilities, const Matrix2D& labels);
double HeadLoss(OutputHead head, const Matrix2D& probabilities, const Matrix2D& labels);
Matrix2D PositiveClass(OutputHead head, const Matrix2D& probabilities);

struct BaselineRunOptions {
  BaselineConfig config;
  TransportKind transport = TransportKind::kInProcess;
  std::vector<std::string> train_ids;
  std::vector<std::string> predict_ids;
  std::shared_ptr<RecordingLog> log;
  std::function<void(const BaselineEpoch&)> on_epoch;
};

struct BaselineRunResult {
  std::vector<BaselineEpoch> history;
  double seconds = 0.0;  // training loop only, encryption included
  Matrix2D predictions;
};

// Guest and host as separate actors over one link. Datasets must already be
// ID-aligned (the train and predict IDs exist on both sides).
BaselineRunResult RunBaseline(const PartyDataset& host_data, const PartyDataset& guest_data,
                              const BaselineRunOptions& options);

}  // namespace stfl

#endif  // STFL_BASELINE_VFL_HPP_
