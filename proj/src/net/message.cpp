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

#include "stfl/net/message.hpp"

#include <algorithm>

#include "stfl/errors.hpp"

namespace stfl {
namespace {

void ExpectDone(const ByteReader& in, std::string_view what) {
  if (!in.done()) {
    throw ProtocolError(std::string(what) + ": " + std::to_string(in.remaining()) +
                        " trailing bytes");
  }
}

}  // namespace

std::string_view MessageTypeName(MessageType type) {
  switch (type) {
    case MessageType::kHello: return "hello";
    case MessageType::kAck: return "ack";
    case MessageType::kAbort: return "abort";
    case MessageType::kShutdown: return "shutdown";
    case MessageType::kSchema: return "schema";
    case MessageType::kPsiGuestBlinded: return "psi-guest-blinded";
    case MessageType::kPsiHostReply: return "psi-host-reply";
    case MessageType::kPsiIntersection: return "psi-intersection";
    case MessageType::kLatentRequest: return "latent-request";
    case MessageType::kLatentBatch: return "latent-batch";
    case MessageType::kPredictionBatch: return "prediction-batch";
    case MessageType::kPublicKey: return "public-key";
    case MessageType::kActivationRequest: return "activation-request";
    case MessageType::kEncryptedActivations: return "encrypted-activations";
    case MessageType::kMaskedLogits: return "masked-logits";
    case MessageType::kLogitShares: return "logit-shares";
    case MessageType::kEncryptedWeightGradient: return "encrypted-weight-gradient";
    case MessageType::kMaskedWeightGradient: return "masked-weight-gradient";
    case MessageType::kEncryptedAccumulatedNoise: return "encrypted-accumulated-noise";
    case MessageType::kEncryptedActivationGradient: return "encrypted-activation-gradient";
  }
  return "unknown";
}

bool IsKnownMessageType(std::uint8_t raw) {
  return std::any_of(kAllMessageTypes.begin(), kAllMessageTypes.end(),
                     [raw](MessageType t) { return static_cast<std::uint8_t>(t) == raw; });
}

Bytes EncodeFrame(const Message& message) {
  if (message.body.size() + 4 > kMaxPayloadBytes) {
    throw ProtocolError("message payload too large: " + std::to_string(message.body.size()));
  }
  ByteWriter out;
  out.U8(kWireVersion);
  out.U8(message.sender);
  out.U8(static_cast<std::uint8_t>(message.type));
  out.U32Be(static_cast<std::uint32_t>(message.body.size() + 4));
  out.U32Be(message.sequence);
  out.Raw(message.body);
  return out.Take();
}

std::uint32_t FramePayloadLength(std::span<const std::uint8_t> header) {
  ByteReader in(header.first(std::min(header.size(), kEnvelopeHeaderBytes)));
  const auto version = in.U8();
  if (version != kWireVersion) {
    throw ProtocolError("unsupported wire version " + std::to_string(version));
  }
  in.U8();
  const auto type = in.U8();
  if (!IsKnownMessageType(type)) {
    throw ProtocolError("unknown message type " + std::to_string(type));
  }
  const auto length = in.U32Be();
  if (length < 4 || length > kMaxPayloadBytes) {
    throw ProtocolError("bad payload length " + std::to_string(length));
  }
  return length;
}

Message DecodeFrame(std::span<const std::uint8_t> frame) {
  const auto length = FramePayloadLength(frame);
  if (frame.size() != kEnvelopeHeaderBytes + length) {
    throw ProtocolError("frame size " + std::to_string(frame.size()) +
                        " disagrees with declared payload length " + std::to_string(length));
  }
  ByteReader in(frame);
  Message message;
  in.U8();
  message.sender = in.U8();
  message.type = static_cast<MessageType>(in.U8());
  in.U32Be();
  message.sequence = in.U32Be();
  const auto body = in.Take(in.remaining());
  message.body.assign(body.begin(), body.end());
  return message;
}

void WriteMatrix(ByteWriter& out, const Matrix2D& m) {
  out.U32Le(static_cast<std::uint32_t>(m.rows()));
  out.U32Le(static_cast<std::uint32_t>(m.cols()));
  for (double v : m.values()) out.F64Le(v);
}

Matrix2D ReadMatrix(ByteReader& in) {
  const std::size_t rows = in.U32Le();
  const std::size_t cols = in.U32Le();
  if (rows != 0 && cols > in.remaining() / 8 / rows) {
    throw ProtocolError("matrix " + std::to_string(rows) + "x" + std::to_string(cols) +
                        " exceeds payload");
  }
  std::vector<double> values(rows * cols);
  for (double& v : values) v = in.F64Le();
  return Matrix2D(rows, cols, std::move(values));
}

void WriteIds(ByteWriter& out, std::span<const std::string> ids) {
  out.U32Le(static_cast<std::uint32_t>(ids.size()));
  for (const auto& id : ids) {
    out.U32Le(static_cast<std::uint32_t>(id.size()));
    out.Raw(id);
  }
}

std::vector<std::string> ReadIds(ByteReader& in) {
  const std::size_t count = in.U32Le();
  if (count > in.remaining() / 4) throw ProtocolError("ID list count exceeds payload");
  std::vector<std::string> ids;
  ids.reserve(count);
  for (std::size_t i = 0; i < count; ++i) ids.push_back(in.String(in.U32Le()));
  return ids;
}

void WriteBigInts(ByteWriter& out, std::span<const mpz_class> values) {
  out.U32Le(static_cast<std::uint32_t>(values.size()));
  for (const auto& v : values) {
    if (sgn(v) < 0) throw ContractError("WriteBigInts: negative value");
    const std::size_t bytes = (mpz_sizeinbase(v.get_mpz_t(), 2) + 7) / 8;
    Bytes buffer(bytes);
    std::size_t written = 0;
    if (bytes > 0) mpz_export(buffer.data(), &written, 1, 1, 1, 0, v.get_mpz_t());
    out.U32Le(static_cast<std::uint32_t>(written));
    out.Raw(std::span<const std::uint8_t>(buffer.data(), written));
  }
}

std::vector<mpz_class> ReadBigInts(ByteReader& in) {
  const std::size_t count = in.U32Le();
  if (count > in.remaining() / 4) throw ProtocolError("big-integer count exceeds payload");
  std::vector<mpz_class> values(count);
  for (auto& v : values) {
    const auto bytes = in.Take(in.U32Le());
    mpz_import(v.get_mpz_t(), bytes.size(), 1, 1, 1, 0, bytes.data());
  }
  return values;
}

Bytes EncodeMatrix(const Matrix2D& m) {
  ByteWriter out;
  WriteMatrix(out, m);
  return out.Take();
}

Matrix2D DecodeMatrix(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  auto m = ReadMatrix(in);
  ExpectDone(in, "matrix payload");
  return m;
}

Bytes EncodeIds(std::span<const std::string> ids) {
  ByteWriter out;
  WriteIds(out, ids);
  return out.Take();
}

std::vector<std::string> DecodeIds(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  auto ids = ReadIds(in);
  ExpectDone(in, "ID list payload");
  return ids;
}

Bytes EncodeIdMatrix(const IdMatrixBatch& batch) {
  if (batch.ids.size() != batch.values.rows()) {
    throw ShapeError("ID/matrix batch: " + std::to_string(batch.ids.size()) + " ids for " +
                     batch.values.ShapeString());
  }
  ByteWriter out;
  WriteIds(out, batch.ids);
  WriteMatrix(out, batch.values);
  return out.Take();
}

IdMatrixBatch DecodeIdMatrix(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  IdMatrixBatch batch;
  batch.ids = ReadIds(in);
  batch.values = ReadMatrix(in);
  ExpectDone(in, "ID/matrix payload");
  if (batch.ids.size() != batch.values.rows()) {
    throw ProtocolError("ID/matrix payload: row count disagrees with ID list");
  }
  return batch;
}

Bytes EncodeControl(const Control& control) {
  ByteWriter out;
  out.U8(control.code);
  out.U32Le(static_cast<std::uint32_t>(control.text.size()));
  out.Raw(control.text);
  return out.Take();
}

Control DecodeControl(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  Control control;
  control.code = in.U8();
  control.text = in.String(in.U32Le());
  ExpectDone(in, "control payload");
  return control;
}

}  // namespace stfl
