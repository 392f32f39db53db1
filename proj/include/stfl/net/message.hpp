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

#ifndef STFL_NET_MESSAGE_HPP_
#define STFL_NET_MESSAGE_HPP_

#include <gmpxx.h>

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stfl/io/bytes.hpp"
#include "stfl/nn/matrix.hpp"

namespace stfl {

inline constexpr std::uint8_t kWireVersion = 1;
// version, sender, type, payload length (big-endian u32)
inline constexpr std::size_t kEnvelopeHeaderBytes = 7;
inline constexpr std::uint32_t kMaxPayloadBytes = 1u << 30;

enum class MessageType : std::uint8_t {
  // control
  kHello = 1,
  kAck = 2,
  kAbort = 3,
  kShutdown = 4,
  // setup
  kSchema = 10,
  kPsiGuestBlinded = 11,
  kPsiHostReply = 12,
  kPsiIntersection = 13,
  // STFL joint training
  kLatentRequest = 20,
  kLatentBatch = 21,
  kPredictionBatch = 22,
  // encrypted baseline
  kPublicKey = 30,
  kActivationRequest = 31,
  kEncryptedActivations = 32,
  kMaskedLogits = 33,
  kLogitShares = 34,
  kEncryptedWeightGradient = 35,
  kMaskedWeightGradient = 36,
  kEncryptedAccumulatedNoise = 37,
  kEncryptedActivationGradient = 38,
};

inline constexpr std::array kAllMessageTypes = {
    MessageType::kHello,
    MessageType::kAck,
    MessageType::kAbort,
    MessageType::kShutdown,
    MessageType::kSchema,
    MessageType::kPsiGuestBlinded,
    MessageType::kPsiHostReply,
    MessageType::kPsiIntersection,
    MessageType::kLatentRequest,
    MessageType::kLatentBatch,
    MessageType::kPredictionBatch,
    MessageType::kPublicKey,
    MessageType::kActivationRequest,
    MessageType::kEncryptedActivations,
    MessageType::kMaskedLogits,
    MessageType::kLogitShares,
    MessageType::kEncryptedWeightGradient,
    MessageType::kMaskedWeightGradient,
    MessageType::kEncryptedAccumulatedNoise,
    MessageType::kEncryptedActivationGradient,
};

// What a payload carries, as far as data locality is concerned. There is no
// kind for raw feature rows: no message type can transport them.
enum class PayloadKind : std::uint8_t {
  kControl,
  kFeatureNames,
  kGroupElements,
  kIdList,
  kLatents,
  kPredictions,
  kPublicKey,
  kCiphertexts,
  kMaskedPlaintext,
};

// Deliberately no default branch: adding a type without classifying it is a
// compile-time warning.
constexpr PayloadKind PayloadKindOf(MessageType type) {
  switch (type) {
    case MessageType::kHello:
    case MessageType::kAck:
    case MessageType::kAbort:
    case MessageType::kShutdown:
      return PayloadKind::kControl;
    case MessageType::kSchema:
      return PayloadKind::kFeatureNames;
    case MessageType::kPsiGuestBlinded:
    case MessageType::kPsiHostReply:
      return PayloadKind::kGroupElements;
    case MessageType::kPsiIntersection:
    case MessageType::kLatentRequest:
    case MessageType::kActivationRequest:
      return PayloadKind::kIdList;
    case MessageType::kLatentBatch:
      return PayloadKind::kLatents;
    case MessageType::kPredictionBatch:
      return PayloadKind::kPredictions;
    case MessageType::kPublicKey:
      return PayloadKind::kPublicKey;
    case MessageType::kEncryptedActivations:
    case MessageType::kMaskedLogits:
    case MessageType::kEncryptedWeightGradient:
    case MessageType::kEncryptedAccumulatedNoise:
    case MessageType::kEncryptedActivationGradient:
      return PayloadKind::kCiphertexts;
    case MessageType::kLogitShares:
    case MessageType::kMaskedWeightGradient:
      return PayloadKind::kMaskedPlaintext;
  }
  return PayloadKind::kControl;  // unreachable for valid enumerators
}

std::string_view MessageTypeName(MessageType type);
bool IsKnownMessageType(std::uint8_t raw);

// The sequence number is per channel and direction. It travels as the first
// four payload bytes (big-endian) so the envelope stays fixed at seven bytes.
struct Message {
  std::uint8_t sender = 0;
  MessageType type = MessageType::kAck;
  std::uint32_t sequence = 0;
  Bytes body;
};

Bytes EncodeFrame(const Message& message);
// Parses one complete frame. Throws ProtocolError on version mismatch,
// unknown type, bad length, or trailing bytes.
Message DecodeFrame(std::span<const std::uint8_t> frame);
// Payload length field of a 7-byte header (validated).
std::uint32_t FramePayloadLength(std::span<const std::uint8_t> header);

// Payload codecs.
void WriteMatrix(ByteWriter& out, const Matrix2D& m);
Matrix2D ReadMatrix(ByteReader& in);
void WriteIds(ByteWriter& out, std::span<const std::string> ids);
std::vector<std::string> ReadIds(ByteReader& in);
void WriteBigInts(ByteWriter& out, std::span<const mpz_class> values);
std::vector<mpz_class> ReadBigInts(ByteReader& in);

Bytes EncodeMatrix(const Matrix2D& m);
Matrix2D DecodeMatrix(std::span<const std::uint8_t> bytes);
Bytes EncodeIds(std::span<const std::string> ids);
std::vector<std::string> DecodeIds(std::span<const std::uint8_t> bytes);

// Row-ID list plus the matrix whose rows follow that order.
struct IdMatrixBatch {
  std::vector<std::string> ids;
  Matrix2D values;
};
Bytes EncodeIdMatrix(const IdMatrixBatch& batch);
IdMatrixBatch DecodeIdMatrix(std::span<const std::uint8_t> bytes);

struct Control {
  std::uint8_t code = 0;
  std::string text;
};
Bytes EncodeControl(const Control& control);
Control DecodeControl(std::span<const std::uint8_t> bytes);

}  // namespace stfl

#endif  // STFL_NET_MESSAGE_HPP_
