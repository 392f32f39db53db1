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

#include "stfl/crypto/sha256.hpp"

#include <sodium.h>

#include <stdexcept>

namespace stfl {
namespace {

crypto_hash_sha256_state* AsState(std::array<std::uint8_t, 128>& raw) {
  static_assert(sizeof(crypto_hash_sha256_state) <= 128);
  return reinterpret_cast<crypto_hash_sha256_state*>(raw.data());
}

}  // namespace

Sha256::Sha256() {
  if (sodium_init() < 0) throw std::runtime_error("libsodium initialization failed");
  crypto_hash_sha256_init(AsState(state_));
}

Sha256& Sha256::Update(std::span<const std::uint8_t> bytes) {
  crypto_hash_sha256_update(AsState(state_), bytes.data(), bytes.size());
  return *this;
}

Sha256& Sha256::Update(std::string_view text) {
  return Update({reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

Digest Sha256::Finish() {
  Digest out;
  crypto_hash_sha256_final(AsState(state_), out.data());
  return out;
}

Digest Sha256Of(std::span<const std::uint8_t> bytes) {
  return Sha256().Update(bytes).Finish();
}

std::string ToHex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xf]);
  }
  return out;
}

}  // namespace stfl
