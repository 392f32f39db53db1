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

#ifndef STFL_PROTOCOL_STFL_HPP_
#define STFL_PROTOCOL_STFL_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stfl/data/dataset.hpp"
#include "stfl/net/transport.hpp"
#include "stfl/nn/classifier.hpp"
#include "stfl/psi/psi.hpp"
#include "stfl/vae/vae.hpp"

namespace stfl {

inline constexpr std::uint8_t kHostPartyId = 0;

// kMean sends the posterior mean; kSample draws mu + sigma * noise per request.
enum class LatentMode : std::uint8_t { kMean, kSample };

class GuestParty {
 public:
  // `id` is 1-based; the host is party 0.
  GuestParty(std::uint8_t id, PartyDataset data);

  std::uint8_t id() const { return id_; }
  const PartyDataset& data() const { return data_; }

  // Trains the VAE on the listed rows only and freezes it.
  const VaeTrainResult& SelfTrain(std::span<const std::string> self_taught_ids,
                                  const TrainConfig& config);
  // Installs an already trained (or hand-built) model instead.
  void SetModel(VaeModel model, std::span<const std::string> self_taught_ids = {});
  bool has_model() const { return model_.has_value(); }
  const VaeModel& model() const;
  std::size_t latent_dim() const { return model().latent_dim; }
  std::string Fingerprint() const { return ParameterFingerprint(model()); }
  const std::optional<VaeTrainResult>& training() const { return training_; }
  const std::vector<std::string>& self_taught_ids() const { return self_taught_; }

  void SetLatentMode(LatentMode mode, std::uint64_t seed = 0);

  // Rows follow the request order. Unknown IDs throw ProtocolError naming them.
  Matrix2D EncodeBatch(std::span<const std::string> ids);

  // Actor loop: answers the host until it sends shutdown. Aborts are sent to
  // the host before the exception propagates.
  void Serve(Endpoint& host, PsiMode psi_mode, std::uint64_t psi_seed);

  // Fingerprint captured at the first latent request of joint training.
  const std::optional<std::string>& joint_start_fingerprint() const {
    return joint_start_fingerprint_;
  }
  const std::vector<std::string>& aligned_ids() const { return aligned_; }

 private:
  void ServeLoop(Endpoint& host, PsiMode psi_mode, std::uint64_t psi_seed);

  std::uint8_t id_;
  PartyDataset data_;
  std::optional<VaeModel> model_;
  std::optional<VaeTrainResult> training_;
  std::vector<std::string> self_taught_;
  LatentMode mode_ = LatentMode::kMean;
  std::uint64_t sample_seed_ = 0;
  std::uint64_t sample_counter_ = 0;
  std::vector<std::string> aligned_;
  std::optional<std::string> joint_start_fingerprint_;
};

struct SetupResult {
  std::vector<std::string> aligned_ids;  // sorted
  std::size_t host_width = 0;
  std::vector<std::size_t> latent_dims;  // per guest, in endpoint order
  std::size_t master_input_width = 0;
};

struct JointTrainResult {
  ClassifierTrainResult classifier;
  double seconds = 0.0;  // wall clock of the whole joint-training loop
};

class HostParty {
 public:
  explicit HostParty(PartyDataset data);

  const PartyDataset& data() const { return data_; }

  // Exchanges schemas, checks that each guest adds new features, and runs
  // PSI with every guest. Either condition failing aborts all guests with a
  // SetupError naming it.
  SetupResult Setup(std::span<Endpoint* const> guests, PsiMode psi_mode, std::uint64_t psi_seed);

  // Pull model: per batch the host requests latents for the batch IDs from
  // every guest, then concatenates [x_H, a_1, ..., a_K] and takes one Adam step
  // on the master model. Nothing flows back to the guests.
  JointTrainResult JointTrain(std::span<Endpoint* const> guests,
                              std::span<const std::string> train_ids, const TrainConfig& config,
                              const EpochCallback& on_epoch = {});

  Matrix2D Predict(std::span<Endpoint* const> guests, std::span<const std::string> ids,
                   std::size_t batch_size = 128);

  void Shutdown(std::span<Endpoint* const> guests);

  const MlpModel& model() const;
  const std::optional<SetupResult>& setup() const { return setup_; }

 private:
  Matrix2D FetchFeatures(std::span<Endpoint* const> guests, std::span<const std::string> ids);
  void AbortAll(std::span<Endpoint* const> guests, const std::exception& error) noexcept;

  PartyDataset data_;
  std::optional<SetupResult> setup_;
  std::optional<MlpModel> model_;
};

struct StflSessionOptions {
  TransportKind transport = TransportKind::kInProcess;
  PsiMode psi_mode = PsiMode::kBlinded;
  std::uint64_t psi_seed = 0;
  TrainConfig train;
  std::vector<std::string> train_ids;    // must lie in the aligned set
  std::vector<std::string> predict_ids;  // may be empty
  std::shared_ptr<RecordingLog> log;     // attached to every endpoint if set
  EpochCallback on_epoch;
};

struct StflSessionResult {
  SetupResult setup;
  JointTrainResult joint;
  Matrix2D predictions;
  MlpModel master;
};

// Runs host and guests as separate actors over fresh links: setup, joint
// training, prediction, shutdown. The first failure (host or guest) is
// rethrown after every actor has stopped.
StflSessionResult RunStflSession(HostParty& host, std::span<GuestParty* const> guests,
                                 const StflSessionOptions& options);

}  // namespace stfl

#endif  // STFL_PROTOCOL_STFL_HPP_
