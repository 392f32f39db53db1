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

#ifndef STFL_CRYPTO_CSPRNG_HPP_
#define STFL_CRYPTO_CSPRNG_HPP_

#include <gmpxx.h>

#include <array>
#include <cstdint>
#include <span>

namespace stfl {

// ChaCha20 keystream generator. Seeded instances are reproducible, which the
// tests and the experiment runner rely on; FromOs() draws a fresh key.
class Csprng {
 public:
  explicit Csprng(const std::array<std::uint8_t, 32>& key);
  static Csprng FromSeed(std::uint64_t seed);
  static Csprng FromOs();

  void Fill(std::span<std::uint8_t> out);
  std::uint64_t NextU64();
  // Uniform integer with exactly `bits` random bits (top bit may be zero).
  mpz_class RandomBits(std::size_t bits);
  // Uniform in [0, bound).
  mpz_class Below(const mpz_class& bound);

 private:
  std::array<std::uint8_t, 32> key_;
  std::uint64_t nonce_ = 0;
};

}  // namespace stfl

#endif  // STFL_CRYPTO_CSPRNG_HPP_
