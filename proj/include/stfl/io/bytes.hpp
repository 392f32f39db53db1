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

#ifndef STFL_IO_BYTES_HPP_
#define STFL_IO_BYTES_HPP_

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stfl/errors.hpp"

namespace stfl {

using Bytes = std::vector<std::uint8_t>;

// Appends fixed-width integers and IEEE doubles to a byte buffer.
class ByteWriter {
 public:
  void U8(std::uint8_t v) { out_.push_back(v); }
  void U32Le(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void U32Be(std::uint32_t v) {
    for (int i = 3; i >= 0; --i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void U64Le(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void F64Le(double v) { U64Le(std::bit_cast<std::uint64_t>(v)); }
  void Raw(std::span<const std::uint8_t> bytes) {
    out_.insert(out_.end(), bytes.begin(), bytes.end());
  }
  void Raw(std::string_view text) { out_.insert(out_.end(), text.begin(), text.end()); }

  const Bytes& bytes() const { return out_; }
  Bytes Take() { return std::move(out_); }

 private:
  Bytes out_;
};

// Reads what ByteWriter wrote; running past the end throws ProtocolError.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t U8() { return Take(1)[0]; }
  std::uint32_t U32Le() {
    auto b = Take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }
  std::uint32_t U32Be() {
    auto b = Take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | b[i];
    return v;
  }
  std::uint64_t U64Le() {
    auto b = Take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }
  double F64Le() { return std::bit_cast<double>(U64Le()); }
  std::span<const std::uint8_t> Take(std::size_t n) {
    if (n > bytes_.size() - pos_) {
      throw ProtocolError("truncated payload: need " + std::to_string(n) +
                          " bytes at offset " + std::to_string(pos_));
    }
    auto view = bytes_.subspan(pos_, n);
    pos_ += n;
    return view;
  }
  std::string String(std::size_t n) {
    auto b = Take(n);
    return {b.begin(), b.end()};
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace stfl

#endif  // STFL_IO_BYTES_HPP_
