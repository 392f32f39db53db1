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

#ifndef STFL_CRYPTO_SHA256_HPP_
#define STFL_CRYPTO_SHA256_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace stfl {

using Digest = std::array<std::uint8_t, 32>;

// Incremental SHA-256 (libsodium).
class Sha256 {
 public:
  Sha256();
  Sha256& Update(std::span<const std::uint8_t> bytes);
  Sha256& Update(std::string_view text);
  Digest Finish();

 private:
  alignas(16) std::array<std::uint8_t, 128> state_{};
};

Digest Sha256Of(std::span<const std::uint8_t> bytes);
std::string ToHex(std::span<const std::uint8_t> bytes);

}  // namespace stfl

#endif  // STFL_CRYPTO_SHA256_HPP_
