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

#ifndef STFL_NET_TRANSPORT_HPP_
#define STFL_NET_TRANSPORT_HPP_

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "stfl/net/message.hpp"

namespace stfl {

enum class TransportKind { kInProcess, kTcp };
TransportKind ParseTransportKind(const std::string& text);
std::string TransportKindName(TransportKind kind);

struct TransportRecord {
  enum class Direction { kSent, kReceived };
  std::string endpoint;
  Direction direction;
  Message message;
};

// Thread-safe log of every message passing through the endpoints it is
// attached to. Tests use it to inspect payloads.
class RecordingLog {
 public:
  void Add(TransportRecord record);
  std::vector<TransportRecord> Snapshot() const;
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::vector<TransportRecord> records_;
};

// One side of an ordered, bidirectional party-to-party channel. Sequence
// numbers are assigned on send and checked on receive; a gap or reordering
// is a protocol error.
class Endpoint {
 public:
  Endpoint(std::uint8_t self_id, std::string name);
  virtual ~Endpoint() = default;
  Endpoint(const Endpoint&) = delete;
  Endpoint& operator=(const Endpoint&) = delete;

  void Send(MessageType type, Bytes body = {});
  Message Receive();
  // Receive and require the given type. An incoming abort is rethrown
  // locally (SetupError keeps its condition).
  Message Expect(MessageType type);
  // Best effort: tell the peer why this side is giving up.
  void SendAbort(const std::exception& error) noexcept;
  // Rethrows a received abort as the local exception type.
  [[noreturn]] static void RethrowAbort(const Message& abort);

  void Attach(std::shared_ptr<RecordingLog> log) { log_ = std::move(log); }
  const std::string& name() const { return name_; }
  std::uint8_t self_id() const { return self_id_; }
  std::uint64_t bytes_sent() const { return bytes_sent_; }
  std::uint64_t bytes_received() const { return bytes_received_; }

  // Wakes a peer blocked in Receive; later reads on either side throw.
  virtual void Close() = 0;

 protected:
  virtual void WriteFrame(Bytes frame) = 0;
  virtual Bytes ReadFrame() = 0;

 private:
  std::uint8_t self_id_;
  std::string name_;
  std::uint32_t next_send_ = 0;
  std::uint32_t next_receive_ = 0;
  std::uint64_t bytes_sent_ = 0;
  std::uint64_t bytes_received_ = 0;
  std::shared_ptr<RecordingLog> log_;
};

struct Link {
  std::unique_ptr<Endpoint> a;
  std::unique_ptr<Endpoint> b;
};

// FIFO queues in memory; frames are fully encoded so the wire format is
// exercised.
Link MakeInProcessLink(std::uint8_t a_id, std::uint8_t b_id);

class TcpListener {
 public:
  explicit TcpListener(const std::string& address = "127.0.0.1", std::uint16_t port = 0);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;
  std::uint16_t port() const { return port_; }
  std::unique_ptr<Endpoint> Accept(std::uint8_t self_id);

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

std::unique_ptr<Endpoint> TcpConnect(const std::string& address, std::uint16_t port,
                                     std::uint8_t self_id, int attempts = 50);

// Loopback TCP pair: `a` is the accepting side.
Link MakeTcpLink(std::uint8_t a_id, std::uint8_t b_id);
Link MakeLink(TransportKind kind, std::uint8_t a_id, std::uint8_t b_id);

}  // namespace stfl

#endif  // STFL_NET_TRANSPORT_HPP_
