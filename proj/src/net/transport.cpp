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

#include "stfl/net/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <thread>

#include "stfl/errors.hpp"

namespace stfl {
namespace {

constexpr std::uint8_t kAbortGeneric = 0;
constexpr std::uint8_t kAbortSetup = 1;

struct FrameQueue {
  std::mutex mutex;
  std::condition_variable ready;
  std::deque<Bytes> frames;
  bool closed = false;
};

class InProcessEndpoint final : public Endpoint {
 public:
  InProcessEndpoint(std::uint8_t self_id, std::string name, std::shared_ptr<FrameQueue> out,
                    std::shared_ptr<FrameQueue> in)
      : Endpoint(self_id, std::move(name)), out_(std::move(out)), in_(std::move(in)) {}
  ~InProcessEndpoint() override { Close(); }

  void Close() override {
    for (auto* q : {out_.get(), in_.get()}) {
      std::lock_guard lock(q->mutex);
      q->closed = true;
      q->ready.notify_all();
    }
  }

 protected:
  void WriteFrame(Bytes frame) override {
    std::lock_guard lock(out_->mutex);
    if (out_->closed) throw ProtocolError(name() + ": send on closed channel");
    out_->frames.push_back(std::move(frame));
    out_->ready.notify_one();
  }

  Bytes ReadFrame() override {
    std::unique_lock lock(in_->mutex);
    in_->ready.wait(lock, [&] { return !in_->frames.empty() || in_->closed; });
    if (in_->frames.empty()) throw ProtocolError(name() + ": channel closed by peer");
    Bytes frame = std::move(in_->frames.front());
    in_->frames.pop_front();
    return frame;
  }

 private:
  std::shared_ptr<FrameQueue> out_;
  std::shared_ptr<FrameQueue> in_;
};

class TcpEndpoint final : public Endpoint {
 public:
  TcpEndpoint(std::uint8_t self_id, std::string name, int fd)
      : Endpoint(self_id, std::move(name)), fd_(fd) {
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  }
  ~TcpEndpoint() override {
    Close();
    ::close(fd_);
  }

  void Close() override { ::shutdown(fd_, SHUT_RDWR); }

 protected:
  void WriteFrame(Bytes frame) override {
    std::size_t sent = 0;
    while (sent < frame.size()) {
      const auto n = ::send(fd_, frame.data() + sent, frame.size() - sent, MSG_NOSIGNAL);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) throw ProtocolError(name() + ": send failed: " + std::strerror(errno));
      sent += static_cast<std::size_t>(n);
    }
  }

  Bytes ReadFrame() override {
    Bytes frame(kEnvelopeHeaderBytes);
    ReadExactly(frame.data(), kEnvelopeHeaderBytes);
    const auto length = FramePayloadLength(frame);
    frame.resize(kEnvelopeHeaderBytes + length);
    ReadExactly(frame.data() + kEnvelopeHeaderBytes, length);
    return frame;
  }

 private:
  void ReadExactly(std::uint8_t* dst, std::size_t count) {
    std::size_t got = 0;
    while (got < count) {
      const auto n = ::recv(fd_, dst + got, count - got, 0);
      if (n < 0 && errno == EINTR) continue;
      if (n == 0) throw ProtocolError(name() + ": channel closed by peer");
      if (n < 0) throw ProtocolError(name() + ": recv failed: " + std::strerror(errno));
      got += static_cast<std::size_t>(n);
    }
  }

  int fd_;
};

std::string PartyName(std::uint8_t id) { return "party" + std::to_string(id); }

}  // namespace

TransportKind ParseTransportKind(const std::string& text) {
  if (text == "in-process" || text == "inprocess") return TransportKind::kInProcess;
  if (text == "tcp") return TransportKind::kTcp;
  throw ValidationError("unknown transport '" + text + "' (expected in-process or tcp)");
}

std::string TransportKindName(TransportKind kind) {
  return kind == TransportKind::kTcp ? "tcp" : "in-process";
}

void RecordingLog::Add(TransportRecord record) {
  std::lock_guard lock(mutex_);
  records_.push_back(std::move(record));
}

std::vector<TransportRecord> RecordingLog::Snapshot() const {
  std::lock_guard lock(mutex_);
  return records_;
}

std::size_t RecordingLog::size() const {
  std::lock_guard lock(mutex_);
  return records_.size();
}

Endpoint::Endpoint(std::uint8_t self_id, std::string name)
    : self_id_(self_id), name_(std::move(name)) {}

void Endpoint::Send(MessageType type, Bytes body) {
  Message message{self_id_, type, next_send_++, std::move(body)};
  Bytes frame = EncodeFrame(message);
  bytes_sent_ += frame.size();
  if (log_) log_->Add({name_, TransportRecord::Direction::kSent, message});
  WriteFrame(std::move(frame));
}

Message Endpoint::Receive() {
  const Bytes frame = ReadFrame();
  bytes_received_ += frame.size();
  Message message = DecodeFrame(frame);
  if (message.sequence != next_receive_) {
    throw ProtocolError(name_ + ": message-sequence violation (expected " +
                        std::to_string(next_receive_) + ", got " +
                        std::to_string(message.sequence) + ")");
  }
  ++next_receive_;
  if (log_) log_->Add({name_, TransportRecord::Direction::kReceived, message});
  return message;
}

Message Endpoint::Expect(MessageType type) {
  Message message = Receive();
  if (message.type == MessageType::kAbort) RethrowAbort(message);
  if (message.type != type) {
    throw ProtocolError(name_ + ": expected " + std::string(MessageTypeName(type)) + ", got " +
                        std::string(MessageTypeName(message.type)));
  }
  return message;
}

void Endpoint::RethrowAbort(const Message& abort) {
  const Control control = DecodeControl(abort.body);
  if (control.code == kAbortSetup) {
    const auto bar = control.text.find('|');
    throw SetupError(control.text.substr(0, bar),
                     bar == std::string::npos ? control.text : control.text.substr(bar + 1));
  }
  throw ProtocolError("party " + std::to_string(abort.sender) + " aborted: " + control.text);
}

void Endpoint::SendAbort(const std::exception& error) noexcept {
  try {
    Control control{kAbortGeneric, error.what()};
    if (const auto* setup = dynamic_cast<const SetupError*>(&error)) {
      control = {kAbortSetup, setup->condition() + "|" + setup->what()};
    }
    Send(MessageType::kAbort, EncodeControl(control));
  } catch (...) {
  }
}

Link MakeInProcessLink(std::uint8_t a_id, std::uint8_t b_id) {
  auto ab = std::make_shared<FrameQueue>();
  auto ba = std::make_shared<FrameQueue>();
  Link link;
  link.a = std::make_unique<InProcessEndpoint>(a_id, PartyName(a_id) + "->" + PartyName(b_id),
                                               ab, ba);
  link.b = std::make_unique<InProcessEndpoint>(b_id, PartyName(b_id) + "->" + PartyName(a_id),
                                               ba, ab);
  return link;
}

TcpListener::TcpListener(const std::string& address, std::uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw ProtocolError(std::string("socket: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, address.c_str(), &addr.sin_addr) != 1) {
    ::close(fd_);
    throw ValidationError("bad listen address '" + address + "'");
  }
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0 ||
      ::listen(fd_, 16) < 0) {
    const std::string err = std::strerror(errno);
    ::close(fd_);
    throw ProtocolError("bind/listen on " + address + ":" + std::to_string(port) + ": " + err);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() { ::close(fd_); }

std::unique_ptr<Endpoint> TcpListener::Accept(std::uint8_t self_id) {
  int fd = -1;
  do {
    fd = ::accept(fd_, nullptr, nullptr);
  } while (fd < 0 && errno == EINTR);
  if (fd < 0) throw ProtocolError(std::string("accept: ") + std::strerror(errno));
  return std::make_unique<TcpEndpoint>(self_id, PartyName(self_id) + "@tcp:" +
                                                    std::to_string(port_), fd);
}

std::unique_ptr<Endpoint> TcpConnect(const std::string& address, std::uint16_t port,
                                     std::uint8_t self_id, int attempts) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  if (::getaddrinfo(address.c_str(), std::to_string(port).c_str(), &hints, &found) != 0) {
    throw ProtocolError("cannot resolve '" + address + "'");
  }
  std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(found, ::freeaddrinfo);
  for (int attempt = 0; attempt < attempts; ++attempt) {
    const int fd = ::socket(found->ai_family, found->ai_socktype, found->ai_protocol);
    if (fd < 0) throw ProtocolError(std::string("socket: ") + std::strerror(errno));
    if (::connect(fd, found->ai_addr, found->ai_addrlen) == 0) {
      return std::make_unique<TcpEndpoint>(
          self_id, PartyName(self_id) + "->" + address + ":" + std::to_string(port), fd);
    }
    ::close(fd);
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  throw ProtocolError("cannot connect to " + address + ":" + std::to_string(port));
}

Link MakeTcpLink(std::uint8_t a_id, std::uint8_t b_id) {
  TcpListener listener;
  Link link;
  link.b = TcpConnect("127.0.0.1", listener.port(), b_id);
  link.a = listener.Accept(a_id);
  return link;
}

Link MakeLink(TransportKind kind, std::uint8_t a_id, std::uint8_t b_id) {
  return kind == TransportKind::kTcp ? MakeTcpLink(a_id, b_id) : MakeInProcessLink(a_id, b_id);
}

}  // namespace stfl
