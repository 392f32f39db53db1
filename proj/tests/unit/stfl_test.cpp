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

#include <gtest/gtest.h>

#include <cstring>
#include <set>
#include <unordered_set>

#include "stfl/errors.hpp"
#include "stfl/nn/loss.hpp"
#include "stfl/protocol/stfl.hpp"
#include "support/cancer.hpp"

namespace stfl {
namespace {

using testing::CancerParties;
using testing::LoadCancerParties;

TrainConfig Config(std::size_t epochs, std::uint64_t seed = 3) {
  TrainConfig c;
  c.epochs = epochs;
  c.seed = seed;
  return c;
}

StflSessionOptions Options(const CancerParties& p, std::size_t epochs,
                           PsiMode psi = PsiMode::kNaive) {
  StflSessionOptions o;
  o.psi_mode = psi;
  o.psi_seed = 17;
  o.train = Config(epochs);
  o.train_ids = p.partition.train;
  o.predict_ids = p.partition.test;
  return o;
}

StflSessionResult RunSingle(HostParty& host, GuestParty& guest, const StflSessionOptions& o) {
  GuestParty* guests[] = {&guest};
  return RunStflSession(host, guests, o);
}

// Encoder whose mean is the input itself: weights [I; 0], identity activation.
VaeModel IdentityVae(std::size_t d) {
  VaeModel m;
  m.latent_dim = d;
  const LayerSpec enc[] = {{2 * d, Activation::kIdentity}};
  const LayerSpec dec[] = {{d, Activation::kIdentity}};
  m.encoder = MakeMlp(d, enc);
  m.decoder = MakeMlp(d, dec);
  for (std::size_t i = 0; i < d; ++i) {
    m.encoder.layers[0].weights(i, i) = 1.0;
    m.decoder.layers[0].weights(i, i) = 1.0;
  }
  return m;
}

TEST(Setup, CancerMasterWidthIsTwentyTwo) {
  const auto p = LoadCancerParties();
  GuestParty guest(1, p.guest);
  guest.SelfTrain(p.partition.self_taught, Config(2));
  EXPECT_EQ(guest.latent_dim(), 7u);
  HostParty host(p.host);
  const auto r = RunSingle(host, guest, Options(p, 1, PsiMode::kBlinded));
  EXPECT_EQ(r.setup.master_input_width, 22u);
  EXPECT_EQ(r.setup.host_width, 15u);
  EXPECT_EQ(r.master.input_dim(), 22u);
  EXPECT_EQ(r.master.layers[0].weights.rows(), 110u);
  // The aligned set is exactly the host's rows: train + test.
  EXPECT_EQ(r.setup.aligned_ids.size(), p.partition.train.size() + p.partition.test.size());
  EXPECT_TRUE(std::is_sorted(r.setup.aligned_ids.begin(), r.setup.aligned_ids.end()));
}

TEST(Setup, GuestWithoutNewFeaturesAborts) {
  const auto p = LoadCancerParties();
  // Host sees all 30 columns; the guest's 15 are a subset.
  auto full_host = p.full.Subset(p.host.ids());
  GuestParty guest(1, p.guest);
  guest.SelfTrain(p.partition.self_taught, Config(1));
  HostParty host(full_host);
  try {
    RunSingle(host, guest, Options(p, 1));
    FAIL() << "expected SetupError";
  } catch (const SetupError& e) {
    EXPECT_EQ(e.condition(), kNewFeatureCondition);
  }
}

TEST(Setup, DisjointIdSpacesAbort) {
  const auto p = LoadCancerParties();
  std::vector<std::string> renamed;
  for (const auto& id : p.guest.ids()) renamed.push_back("g-" + id);
  PartyDataset other(renamed, p.guest.feature_names(), p.guest.features());
  std::vector<std::string> renamed_self;
  for (const auto& id : p.partition.self_taught) renamed_self.push_back("g-" + id);
  for (PsiMode mode : {PsiMode::kNaive, PsiMode::kBlinded}) {
    GuestParty guest(1, other);
    guest.SelfTrain(renamed_self, Config(1));
    HostParty host(p.host);
    try {
      RunSingle(host, guest, Options(p, 1, mode));
      FAIL() << "expected SetupError";
    } catch (const SetupError& e) {
      EXPECT_EQ(e.condition(), kIdOverlapCondition);
    }
  }
}

TEST(SelfTrain, DelegatesToVaeTraining) {
  const auto p = LoadCancerParties();
  GuestParty guest(1, p.guest);
  EXPECT_EQ(p.partition.self_taught.size(), 227u);  // 228 in the original runs, floor here
  const auto& trained = guest.SelfTrain(p.partition.self_taught, Config(5));
  const auto direct = TrainVae(p.guest.FeaturesFor(p.partition.self_taught),
                               VaeSizing::ForInput(15), Config(5));
  EXPECT_EQ(trained.model, direct.model);
  EXPECT_EQ(guest.Fingerprint(), guest.Fingerprint());
  EXPECT_EQ(guest.Fingerprint(), ParameterFingerprint(direct.model));
  EXPECT_THROW(guest.SelfTrain({}, Config(1)), ValidationError);
}

TEST(EncodeBatch, MeanModeIsDeterministicAndDelegates) {
  const auto p = LoadCancerParties();
  GuestParty guest(1, p.guest);
  guest.SelfTrain(p.partition.self_taught, Config(3));
  std::vector<std::string> ids(p.partition.train.begin(), p.partition.train.begin() + 9);
  const auto a = guest.EncodeBatch(ids);
  EXPECT_EQ(a, guest.EncodeBatch(ids));
  EXPECT_EQ(a.cols(), 7u);
  EXPECT_EQ(a, Encode(guest.model(), p.guest.FeaturesFor(ids)).mu);
  std::vector<std::string> reversed(ids.rbegin(), ids.rend());
  const auto b = guest.EncodeBatch(reversed);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    for (std::size_t c = 0; c < 7; ++c) EXPECT_EQ(b(r, c), a(ids.size() - 1 - r, c));
  }
  guest.SetLatentMode(LatentMode::kSample, 5);
  EXPECT_NE(guest.EncodeBatch(ids), guest.EncodeBatch(ids));
}

TEST(EncodeBatch, UnknownIdIsNamed) {
  const auto p = LoadCancerParties();
  GuestParty guest(1, p.guest);
  guest.SelfTrain(p.partition.self_taught, Config(1));
  std::vector<std::string> ids = {p.partition.train[0], "ghost-17"};
  try {
    guest.EncodeBatch(ids);
    FAIL();
  } catch (const ProtocolError& e) {
    EXPECT_NE(std::string(e.what()).find("ghost-17"), std::string::npos);
  }
}

TEST(JointTrain, IdentityEncoderMatchesCentralizedTraining) {
  const auto p = LoadCancerParties();
  GuestParty guest(1, p.guest);
  guest.SetModel(IdentityVae(15), p.partition.self_taught);
  HostParty host(p.host);
  const auto options = Options(p, 30);
  const auto r = RunSingle(host, guest, options);

  // Oracle: train the same classifier on the raw concatenation [x_H | x_G].
  const PartyDataset& full = p.full;
  const auto central = TrainClassifier(
      30, p.partition.train, full.LabelsFor(p.partition.train),
      [&](std::span<const std::string> ids) { return full.FeaturesFor(ids); }, options.train);
  ASSERT_EQ(r.master.layers.size(), central.model.layers.size());
  double worst = 0.0;
  for (std::size_t l = 0; l < r.master.layers.size(); ++l) {
    worst = std::max(worst, MaxAbsDiff(r.master.layers[l].weights, central.model.layers[l].weights));
    for (std::size_t j = 0; j < r.master.layers[l].bias.size(); ++j) {
      worst = std::max(worst, std::abs(r.master.layers[l].bias[j] - central.model.layers[l].bias[j]));
    }
  }
  EXPECT_LE(worst, 1e-10);
  const auto central_pred = Predict(central.model, full.FeaturesFor(p.partition.test));
  EXPECT_LE(MaxAbsDiff(r.predictions, central_pred), 1e-10);
}

TEST(JointTrain, FreezesGuestAndImprovesLoss) {
  const auto p = LoadCancerParties();
  GuestParty guest(1, p.guest);
  guest.SelfTrain(p.partition.self_taught, Config(100));
  const std::string before = guest.Fingerprint();
  HostParty host(p.host);
  const auto r = RunSingle(host, guest, Options(p, 100));
  EXPECT_EQ(guest.Fingerprint(), before);
  ASSERT_TRUE(guest.joint_start_fingerprint().has_value());
  EXPECT_EQ(*guest.joint_start_fingerprint(), before);
  const auto& h = r.joint.classifier.history;
  ASSERT_EQ(h.size(), 100u);
  EXPECT_LT(h.back().loss, h.front().loss);
  EXPECT_GT(r.joint.seconds, 0.0);
  for (double v : r.predictions.values()) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(JointTrain, DeterministicAcrossRuns) {
  const auto p = LoadCancerParties();
  MlpModel first;
  for (int run = 0; run < 2; ++run) {
    GuestParty guest(1, p.guest);
    guest.SelfTrain(p.partition.self_taught, Config(10));
    HostParty host(p.host);
    const auto r = RunSingle(host, guest, Options(p, 10));
    if (run == 0) {
      first = r.master;
    } else {
      EXPECT_EQ(r.master, first);
    }
  }
}

TEST(DataLocality, NoRawFeatureBytesLeaveTheGuest) {
  const auto p = LoadCancerParties();
  GuestParty guest(1, p.guest);
  guest.SelfTrain(p.partition.self_taught, Config(5));
  HostParty host(p.host);
  auto options = Options(p, 3, PsiMode::kBlinded);
  options.log = std::make_shared<RecordingLog>();
  RunSingle(host, guest, options);

  std::unordered_set<std::uint64_t> raw_values;
  for (double v : p.guest.features().values()) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    raw_values.insert(bits);
  }
  const std::set<PayloadKind> allowed = {PayloadKind::kControl, PayloadKind::kFeatureNames,
                                         PayloadKind::kGroupElements, PayloadKind::kIdList,
                                         PayloadKind::kLatents};
  std::size_t latent_batches = 0;
  for (const auto& record : options.log->Snapshot()) {
    const Message& m = record.message;
    EXPECT_TRUE(allowed.count(PayloadKindOf(m.type))) << MessageTypeName(m.type);
    if (m.sender != kHostPartyId && record.direction == TransportRecord::Direction::kSent) {
      for (std::size_t off = 0; off + 8 <= m.body.size(); ++off) {
        std::uint64_t bits;
        std::memcpy(&bits, m.body.data() + off, 8);
        ASSERT_FALSE(raw_values.count(bits))
            << MessageTypeName(m.type) << " carries a raw feature value at offset " << off;
      }
    }
    if (m.type == MessageType::kLatentBatch && record.direction == TransportRecord::Direction::kSent) {
      ++latent_batches;
      EXPECT_EQ(DecodeIdMatrix(m.body).values.cols(), 7u);
    }
  }
  // 3 epochs x 2 train batches + 1 prediction batch
  EXPECT_EQ(latent_batches, 7u);
}

TEST(GradientBoundary, HostSendsNoGradients) {
  const auto p = LoadCancerParties();
  GuestParty guest(1, p.guest);
  guest.SelfTrain(p.partition.self_taught, Config(2));
  HostParty host(p.host);
  auto options = Options(p, 2);
  options.log = std::make_shared<RecordingLog>();
  RunSingle(host, guest, options);
  const std::set<MessageType> host_to_guest = {MessageType::kHello, MessageType::kPsiHostReply,
                                               MessageType::kAck, MessageType::kLatentRequest,
                                               MessageType::kShutdown, MessageType::kAbort};
  for (const auto& record : options.log->Snapshot()) {
    if (record.message.sender == kHostPartyId) {
      EXPECT_TRUE(host_to_guest.count(record.message.type))
          << MessageTypeName(record.message.type);
    }
  }
}

TEST(MultiGuest, WidthsAddUpOverTcp) {
  const auto p = LoadCancerParties();
  const auto& names = p.full.feature_names();
  std::vector<std::string> host_f(names.begin(), names.begin() + 10);
  std::vector<std::string> g1_f(names.begin() + 10, names.begin() + 20);
  std::vector<std::string> g2_f(names.begin() + 20, names.end());
  HostParty host(p.full.Subset(p.host.ids()).Project(host_f, true));
  GuestParty g1(1, p.full.Project(g1_f, false));
  GuestParty g2(2, p.full.Project(g2_f, false));
  g1.SelfTrain(p.partition.self_taught, Config(2));
  g2.SelfTrain(p.partition.self_taught, Config(2));
  auto options = Options(p, 2, PsiMode::kBlinded);
  options.transport = TransportKind::kTcp;
  GuestParty* guests[] = {&g1, &g2};
  const auto r = RunStflSession(host, guests, options);
  EXPECT_EQ(r.setup.master_input_width, 10u + 5u + 5u);
  EXPECT_EQ(r.predictions.rows(), p.partition.test.size());
}

TEST(Predict, IdOutsideAlignedSetIsRejectedByGuest) {
  const auto p = LoadCancerParties();
  GuestParty guest(1, p.guest);
  guest.SelfTrain(p.partition.self_taught, Config(1));
  HostParty host(p.host);
  auto options = Options(p, 1);
  // A self-taught ID is known to the guest but was never aligned.
  options.predict_ids = {p.partition.self_taught[0]};
  EXPECT_THROW(RunSingle(host, guest, options), ProtocolError);
}

TEST(Predict, ZeroOutputLayerGivesOneHalf) {
  MlpModel m = MakeClassifier(4);
  Rng rng(1);
  InitializeGlorot(m, rng);
  for (double& w : m.layers.back().weights.values()) w = 0.0;
  for (double& b : m.layers.back().bias) b = 0.0;
  std::vector<std::string> ids = {"a", "b", "c"};
  const auto out = PredictClassifier(
      m, ids, [](std::span<const std::string> chunk) { return Matrix2D(chunk.size(), 4, 0.7); }, 2);
  for (double v : out.values()) EXPECT_EQ(v, 0.5);
}

}  // namespace
}  // namespace stfl
