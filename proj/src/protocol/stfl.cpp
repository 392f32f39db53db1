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

#include "stfl/protocol/stfl.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <set>
#include <thread>

#include "stfl/crypto/csprng.hpp"
#include "stfl/crypto/sha256.hpp"
#include "stfl/errors.hpp"
#include "stfl/nn/rng.hpp"

namespace stfl {
namespace {

constexpr std::uint64_t kHostPsiSalt = 0x100;
constexpr std::uint64_t kGuestPsiSalt = 0x200;

Bytes EncodeSchema(const std::vector<std::string>& features, std::size_t latent_dim) {
  ByteWriter out;
  WriteIds(out, features);
  out.U32Le(static_cast<std::uint32_t>(latent_dim));
  return out.Take();
}

std::pair<std::vector<std::string>, std::size_t> DecodeSchema(std::span<const std::uint8_t> b) {
  ByteReader in(b);
  auto features = ReadIds(in);
  const std::size_t latent = in.U32Le();
  if (!in.done()) throw ProtocolError("schema payload: trailing bytes");
  return {std::move(features), latent};
}

// Naive mode compares SHA-256 digests of the IDs directly.
Bytes EncodeDigests(const std::vector<std::string>& ids) {
  ByteWriter out;
  out.U32Le(static_cast<std::uint32_t>(ids.size()));
  for (const auto& id : ids) {
    const Digest d = Sha256Of({reinterpret_cast<const std::uint8_t*>(id.data()), id.size()});
    out.Raw(d);
  }
  return out.Take();
}

std::set<std::string> DecodeDigests(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  const std::size_t count = in.U32Le();
  if (count > in.remaining() / 32) throw ProtocolError("digest count exceeds payload");
  std::set<std::string> out;
  for (std::size_t i = 0; i < count; ++i) out.insert(ToHex(in.Take(32)));
  if (!in.done()) throw ProtocolError("digest payload: trailing bytes");
  return out;
}

std::string DigestHex(const std::string& id) {
  return ToHex(Sha256Of({reinterpret_cast<const std::uint8_t*>(id.data()), id.size()}));
}

Bytes EncodeHostReply(const PsiGroup& group, std::span<const mpz_class> guest_double,
                      std::span<const mpz_class> host_single) {
  ByteWriter out;
  const Bytes first = EncodeGroupElements(group, guest_double);
  out.U32Le(static_cast<std::uint32_t>(first.size()));
  out.Raw(first);
  out.Raw(EncodeGroupElements(group, host_single));
  return out.Take();
}

Bytes EncodeControlCode(std::uint8_t code, std::string text = {}) {
  return EncodeControl({code, std::move(text)});
}

}  // namespace

GuestParty::GuestParty(std::uint8_t id, PartyDataset data) : id_(id), data_(std::move(data)) {
  if (id == kHostPartyId) throw ValidationError("guest id 0 is reserved for the host");
  if (data_.has_labels()) throw ValidationError("guest datasets must not carry labels");
}

const VaeTrainResult& GuestParty::SelfTrain(std::span<const std::string> self_taught_ids,
                                            const TrainConfig& config) {
  if (self_taught_ids.empty()) {
    throw ValidationError("guest " + std::to_string(id_) + ": empty self-taught set");
  }
  const Matrix2D x = data_.FeaturesFor(self_taught_ids);
  training_ = TrainVae(x, VaeSizing::ForInput(data_.feature_count()), config);
  model_ = training_->model;
  self_taught_.assign(self_taught_ids.begin(), self_taught_ids.end());
  return *training_;
}

void GuestParty::SetModel(VaeModel model, std::span<const std::string> self_taught_ids) {
  model.Validate();
  if (model.encoder.input_dim() != data_.feature_count()) {
    throw ShapeError("guest " + std::to_string(id_) + ": model expects " +
                     std::to_string(model.encoder.input_dim()) + " features, party has " +
                     std::to_string(data_.feature_count()));
  }
  model_ = std::move(model);
  training_.reset();
  self_taught_.assign(self_taught_ids.begin(), self_taught_ids.end());
}

const VaeModel& GuestParty::model() const {
  if (!model_) throw ContractError("guest " + std::to_string(id_) + " has no trained model");
  return *model_;
}

void GuestParty::SetLatentMode(LatentMode mode, std::uint64_t seed) {
  mode_ = mode;
  sample_seed_ = seed;
  sample_counter_ = 0;
}

Matrix2D GuestParty::EncodeBatch(std::span<const std::string> ids) {
  const Posterior posterior = Encode(model(), data_.FeaturesFor(ids));
  if (mode_ == LatentMode::kMean) return posterior.mu;
  Rng rng(Rng::Derive(sample_seed_, ++sample_counter_));
  Matrix2D noise(posterior.mu.rows(), posterior.mu.cols());
  for (double& e : noise.values()) e = rng.Normal();
  return Reparameterize(posterior.mu, posterior.logvar, noise);
}

void GuestParty::Serve(Endpoint& host, PsiMode psi_mode, std::uint64_t psi_seed) {
  try {
    ServeLoop(host, psi_mode, psi_seed);
  } catch (const std::exception& e) {
    host.SendAbort(e);
    throw;
  }
}

void GuestParty::ServeLoop(Endpoint& host, PsiMode psi_mode, std::uint64_t psi_seed) {
  const Control hello = DecodeControl(host.Expect(MessageType::kHello).body);
  if (hello.code != static_cast<std::uint8_t>(psi_mode)) {
    throw ProtocolError("guest " + std::to_string(id_) + ": host requested a different PSI mode");
  }
  host.Send(MessageType::kSchema, EncodeSchema(data_.feature_names(), latent_dim()));

  // Private ID alignment. The guest learns the shared IDs and reports them.
  const IdSet own(data_.ids());
  std::vector<std::string> shared;
  if (psi_mode == PsiMode::kNaive) {
    host.Send(MessageType::kPsiGuestBlinded, EncodeDigests(own.Sorted()));
    const auto host_digests = DecodeDigests(host.Expect(MessageType::kPsiHostReply).body);
    for (const auto& id : own.Sorted()) {
      if (host_digests.count(DigestHex(id))) shared.push_back(id);
    }
  } else {
    const PsiGroup& group = PsiGroup::Modp2048();
    Csprng rng = Csprng::FromSeed(Rng::Derive(psi_seed, kGuestPsiSalt + id_));
    PsiGuestSession session(group, own, rng);
    const auto single = session.BlindOwn();
    host.Send(MessageType::kPsiGuestBlinded, EncodeGroupElements(group, single));
    const Message reply = host.Expect(MessageType::kPsiHostReply);
    ByteReader in(reply.body);
    const auto first = in.Take(in.U32Le());
    const auto doubled = DecodeGroupElements(group, first);
    const auto host_single = DecodeGroupElements(group, in.Take(in.remaining()));
    shared = session.Intersect(doubled, host_single);
  }
  const std::set<std::string> self_taught(self_taught_.begin(), self_taught_.end());
  for (const auto& id : shared) {
    if (self_taught.count(id)) {
      throw ProtocolError("guest " + std::to_string(id_) + ": ID '" + id +
                          "' is both self-taught and shared with the host");
    }
  }
  host.Send(MessageType::kPsiIntersection, EncodeIds(shared));
  aligned_ = DecodeIds(host.Expect(MessageType::kAck).body);
  const std::set<std::string> aligned(aligned_.begin(), aligned_.end());

  for (;;) {
    const Message message = host.Receive();
    switch (message.type) {
      case MessageType::kLatentRequest: {
        if (!joint_start_fingerprint_) joint_start_fingerprint_ = Fingerprint();
        auto ids = DecodeIds(message.body);
        for (const auto& id : ids) {
          if (!aligned.count(id)) {
            throw ProtocolError("guest " + std::to_string(id_) + ": requested ID '" + id +
                                "' is not in the aligned set");
          }
        }
        Matrix2D latents = EncodeBatch(ids);
        host.Send(MessageType::kLatentBatch, EncodeIdMatrix({std::move(ids), std::move(latents)}));
        break;
      }
      case MessageType::kShutdown: {
        if (joint_start_fingerprint_ && *joint_start_fingerprint_ != Fingerprint()) {
          throw ContractError("guest " + std::to_string(id_) +
                              ": encoder parameters changed during joint training");
        }
        host.Send(MessageType::kAck);
        return;
      }
      case MessageType::kAbort:
        Endpoint::RethrowAbort(message);
      default:
        throw ProtocolError("guest " + std::to_string(id_) + ": unexpected " +
                            std::string(MessageTypeName(message.type)));
    }
  }
}

HostParty::HostParty(PartyDataset data) : data_(std::move(data)) {
  if (!data_.has_labels()) throw ValidationError("host dataset must carry labels");
}

void HostParty::AbortAll(std::span<Endpoint* const> guests, const std::exception& error) noexcept {
  for (Endpoint* g : guests) g->SendAbort(error);
}

SetupResult HostParty::Setup(std::span<Endpoint* const> guests, PsiMode psi_mode,
                             std::uint64_t psi_seed) {
  if (guests.empty()) throw ValidationError("setup: no guest parties");
  try {
    for (Endpoint* g : guests) {
      g->Send(MessageType::kHello, EncodeControlCode(static_cast<std::uint8_t>(psi_mode), "host"));
    }
    SetupResult result;
    result.host_width = data_.feature_count();
    std::vector<std::vector<std::string>> guest_features;
    for (Endpoint* g : guests) {
      auto [features, latent] = DecodeSchema(g->Expect(MessageType::kSchema).body);
      if (latent == 0) throw ProtocolError("setup: guest announced a zero-width latent");
      guest_features.push_back(std::move(features));
      result.latent_dims.push_back(latent);
    }
    ValidateNewFeatures(data_.feature_names(), guest_features);

    const IdSet own(data_.ids());
    std::optional<std::set<std::string>> aligned;
    for (std::size_t k = 0; k < guests.size(); ++k) {
      Endpoint& g = *guests[k];
      std::vector<std::string> shared;
      if (psi_mode == PsiMode::kNaive) {
        g.Expect(MessageType::kPsiGuestBlinded);
        g.Send(MessageType::kPsiHostReply, EncodeDigests(own.Sorted()));
        for (auto& id : DecodeIds(g.Expect(MessageType::kPsiIntersection).body)) {
          if (!own.contains(id)) throw ProtocolError("PSI: guest reported an ID the host lacks");
          shared.push_back(std::move(id));
        }
        std::sort(shared.begin(), shared.end());
        if (shared.empty()) {
          throw SetupError(kIdOverlapCondition, "host and guest " + std::to_string(k + 1) +
                                                    " share no sample IDs");
        }
      } else {
        const PsiGroup& group = PsiGroup::Modp2048();
        Csprng rng = Csprng::FromSeed(Rng::Derive(psi_seed, kHostPsiSalt + k));
        PsiHostSession session(group, own, rng);
        const auto guest_single =
            DecodeGroupElements(group, g.Expect(MessageType::kPsiGuestBlinded).body);
        g.Send(MessageType::kPsiHostReply,
               EncodeHostReply(group, session.Reblind(guest_single), session.BlindOwn(rng)));
        shared = session.Accept(DecodeIds(g.Expect(MessageType::kPsiIntersection).body));
      }
      if (!aligned) {
        aligned.emplace(shared.begin(), shared.end());
      } else {
        std::set<std::string> narrowed;
        for (const auto& id : shared) {
          if (aligned->count(id)) narrowed.insert(id);
        }
        aligned = std::move(narrowed);
      }
    }
    if (aligned->empty()) {
      throw SetupError(kIdOverlapCondition, "no sample ID is shared by the host and all guests");
    }
    result.aligned_ids.assign(aligned->begin(), aligned->end());
    for (Endpoint* g : guests) g->Send(MessageType::kAck, EncodeIds(result.aligned_ids));
    result.master_input_width = result.host_width;
    for (std::size_t w : result.latent_dims) result.master_input_width += w;
    setup_ = result;
    return result;
  } catch (const std::exception& e) {
    AbortAll(guests, e);
    throw;
  }
}

Matrix2D HostParty::FetchFeatures(std::span<Endpoint* const> guests,
                                  std::span<const std::string> ids) {
  const Bytes request = EncodeIds(ids);
  for (Endpoint* g : guests) g->Send(MessageType::kLatentRequest, request);
  std::vector<Matrix2D> parts;
  parts.reserve(guests.size() + 1);
  parts.push_back(data_.FeaturesFor(ids));
  for (std::size_t k = 0; k < guests.size(); ++k) {
    IdMatrixBatch batch = DecodeIdMatrix(guests[k]->Expect(MessageType::kLatentBatch).body);
    if (!std::equal(batch.ids.begin(), batch.ids.end(), ids.begin(), ids.end())) {
      throw ProtocolError("latent batch from guest " + std::to_string(k + 1) +
                          " does not follow the requested row order");
    }
    if (batch.values.cols() != setup_->latent_dims[k]) {
      throw ProtocolError("latent batch from guest " + std::to_string(k + 1) + " has width " +
                          std::to_string(batch.values.cols()) + ", announced " +
                          std::to_string(setup_->latent_dims[k]));
    }
    if (!batch.values.AllFinite()) {
      throw NumericalError("latent batch from guest " + std::to_string(k + 1) +
                           " is not finite");
    }
    parts.push_back(std::move(batch.values));
  }
  return HConcat(parts);
}

JointTrainResult HostParty::JointTrain(std::span<Endpoint* const> guests,
                                       std::span<const std::string> train_ids,
                                       const TrainConfig& config, const EpochCallback& on_epoch) {
  try {
    if (!setup_) throw ContractError("joint training requires a completed setup");
    if (guests.size() != setup_->latent_dims.size()) {
      throw ContractError("joint training: guest count differs from setup");
    }
    const std::set<std::string> aligned(setup_->aligned_ids.begin(), setup_->aligned_ids.end());
    for (const auto& id : train_ids) {
      if (!aligned.count(id)) {
        throw ValidationError("training ID '" + id + "' is not in the aligned set");
      }
    }
    const auto started = std::chrono::steady_clock::now();
    JointTrainResult result;
    result.classifier = TrainClassifier(
        setup_->master_input_width, train_ids, data_.LabelsFor(train_ids),
        [&](std::span<const std::string> ids) { return FetchFeatures(guests, ids); }, config,
        on_epoch);
    result.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    model_ = result.classifier.model;
    return result;
  } catch (const std::exception& e) {
    AbortAll(guests, e);
    throw;
  }
}

Matrix2D HostParty::Predict(std::span<Endpoint* const> guests, std::span<const std::string> ids,
                            std::size_t batch_size) {
  try {
    return PredictClassifier(
        model(), ids, [&](std::span<const std::string> chunk) { return FetchFeatures(guests, chunk); },
        batch_size);
  } catch (const std::exception& e) {
    AbortAll(guests, e);
    throw;
  }
}

void HostParty::Shutdown(std::span<Endpoint* const> guests) {
  for (Endpoint* g : guests) g->Send(MessageType::kShutdown);
  for (Endpoint* g : guests) g->Expect(MessageType::kAck);
}

const MlpModel& HostParty::model() const {
  if (!model_) throw ContractError("host has no trained master model");
  return *model_;
}

StflSessionResult RunStflSession(HostParty& host, std::span<GuestParty* const> guests,
                                 const StflSessionOptions& options) {
  std::vector<Link> links;
  std::vector<Endpoint*> host_side;
  for (GuestParty* g : guests) {
    links.push_back(MakeLink(options.transport, kHostPartyId, g->id()));
    if (options.log) {
      links.back().a->Attach(options.log);
      links.back().b->Attach(options.log);
    }
    host_side.push_back(links.back().a.get());
  }

  std::vector<std::exception_ptr> guest_errors(guests.size());
  std::vector<std::thread> threads;
  for (std::size_t k = 0; k < guests.size(); ++k) {
    threads.emplace_back([&, k] {
      try {
        guests[k]->Serve(*links[k].b, options.psi_mode, options.psi_seed);
      } catch (...) {
        guest_errors[k] = std::current_exception();
      }
    });
  }

  StflSessionResult result;
  std::exception_ptr host_error;
  try {
    result.setup = host.Setup(host_side, options.psi_mode, options.psi_seed);
    result.joint = host.JointTrain(host_side, options.train_ids, options.train, options.on_epoch);
    result.master = host.model();
    if (!options.predict_ids.empty()) {
      result.predictions = host.Predict(host_side, options.predict_ids, options.train.batch_size);
    }
    host.Shutdown(host_side);
  } catch (...) {
    host_error = std::current_exception();
    for (auto& link : links) link.a->Close();
  }
  for (auto& t : threads) t.join();
  if (host_error) std::rethrow_exception(host_error);
  for (const auto& e : guest_errors) {
    if (e) std::rethrow_exception(e);
  }
  return result;
}

}  // namespace stfl
