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

#include "stfl/crypto/csprng.hpp"

#include <sodium.h>

#include <stdexcept>
#include <vector>

#include "stfl/crypto/sha256.hpp"

namespace stfl {
namespace {

void EnsureSodium() {
  if (sodium_init() < 0) throw std::runtime_error("libsodium initialization failed");
}

}  // namespace

Csprng::Csprng(const std::array<std::uint8_t, 32>& key) : key_(key) { EnsureSodium(); }

Csprng Csprng::FromSeed(std::uint64_t seed) {
  std::array<std::uint8_t, 8> bytes{};
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<std::uint8_t>(seed >> (8 * i));
  return Csprng(Sha256().Update("stfl-csprng").Update(bytes).Finish());
}

Csprng Csprng::FromOs() {
  EnsureSodium();
  std::array<std::uint8_t, 32> key;
  randombytes_buf(key.data(), key.size());
  return Csprng(key);
}

void Csprng::Fill(std::span<std::uint8_t> out) {
  std::array<std::uint8_t, crypto_stream_chacha20_NONCEBYTES> nonce{};
  for (std::size_t i = 0; i < nonce.size(); ++i) {
    nonce[i] = static_cast<std::uint8_t>(nonce_ >> (8 * i));
  }
  ++nonce_;
  crypto_stream_chacha20(out.data(), out.size(), nonce.data(), key_.data());
}

std::uint64_t Csprng::NextU64() {
  std::array<std::uint8_t, 8> b;
  Fill(b);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

mpz_class Csprng::RandomBits(std::size_t bits) {
  std::vector<std::uint8_t> bytes((bits + 7) / 8);
  Fill(bytes);
  mpz_class out;
  mpz_import(out.get_mpz_t(), bytes.size(), 1, 1, 1, 0, bytes.data());
  const std::size_t excess = bytes.size() * 8 - bits;
  if (excess > 0) out >>= excess;
  return out;
}

mpz_class Csprng::Below(const mpz_class& bound) {
  if (bound <= 0) throw std::invalid_argument("Csprng::Below: bound must be positive");
  const std::size_t bits = mpz_sizeinbase(bound.get_mpz_t(), 2);
  mpz_class candidate;
  do {
    candidate = RandomBits(bits);
  } while (candidate >= bound);
  return candidate;
}

}  // namespace stfl
