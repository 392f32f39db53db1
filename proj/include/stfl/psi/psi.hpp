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

#ifndef STFL_PSI_PSI_HPP_
#define STFL_PSI_PSI_HPP_

#include <gmpxx.h>

#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stfl/crypto/csprng.hpp"
#include "stfl/io/bytes.hpp"

namespace stfl {

// A party's sample IDs. Construction rejects duplicates.
class IdSet {
 public:
  IdSet() = default;
  explicit IdSet(std::span<const std::string> ids);
  IdSet(std::initializer_list<std::string> ids);

  bool contains(const std::string& id) const { return ids_.count(id) > 0; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  // Canonical (sorted) order.
  std::vector<std::string> Sorted() const { return {ids_.begin(), ids_.end()}; }

 private:
  std::set<std::string> ids_;
};

enum class PsiMode { kNaive, kBlinded };

// Quadratic-residue subgroup of a safe-prime group p = 2q + 1.
struct PsiGroup {
  mpz_class p;
  mpz_class q;
  std::size_t element_bytes = 0;
  std::size_t exponent_bits = 256;

  // RFC 3526 group 14 (2048-bit MODP).
  static const PsiGroup& Modp2048();
};

// SHA-256 in counter mode, re-hashed until the value is a nonzero residue
// below p, then squared into the order-q subgroup.
mpz_class HashToGroup(const PsiGroup& group, std::string_view id);
mpz_class RandomExponent(const PsiGroup& group, Csprng& rng);
// element^exponent mod p
mpz_class Blind(const PsiGroup& group, const mpz_class& element, const mpz_class& exponent);

// Big-endian, fixed width (group.element_bytes) per element.
Bytes EncodeGroupElements(const PsiGroup& group, std::span<const mpz_class> elements);
std::vector<mpz_class> DecodeGroupElements(const PsiGroup& group,
                                           std::span<const std::uint8_t> bytes);

// Guest side of DH-style PSI. The guest learns which of its IDs are shared and
// reports exactly those back; the host never sees the rest.
class PsiGuestSession {
 public:
  PsiGuestSession(const PsiGroup& group, const IdSet& ids, Csprng& rng);

  // H(y)^b for each own ID, in Sorted() order.
  std::vector<mpz_class> BlindOwn() const;
  // own_double: H(y)^ba in the order BlindOwn() produced.
  // host_single: H(x)^a for the host's IDs in any order.
  std::vector<std::string> Intersect(std::span<const mpz_class> own_double,
                                     std::span<const mpz_class> host_single) const;

 private:
  const PsiGroup& group_;
  std::vector<std::string> ids_;
  mpz_class exponent_;
};

class PsiHostSession {
 public:
  PsiHostSession(const PsiGroup& group, const IdSet& ids, Csprng& rng);

  std::vector<mpz_class> Reblind(std::span<const mpz_class> guest_single) const;
  // H(x)^a for own IDs, shuffled.
  std::vector<mpz_class> BlindOwn(Csprng& rng) const;
  // Checks the guest's reported intersection against the host set and returns
  // it sorted. Throws SetupError (id-overlap) when empty.
  std::vector<std::string> Accept(std::span<const std::string> reported) const;

 private:
  const PsiGroup& group_;
  IdSet ids_;
  mpz_class exponent_;
};

// Runs both roles locally and returns the sorted intersection. An empty
// intersection aborts with SetupError naming the id-overlap condition.
std::vector<std::string> PsiIntersect(const IdSet& host_ids, const IdSet& guest_ids,
                                      PsiMode mode, Csprng& rng,
                                      const PsiGroup& group = PsiGroup::Modp2048());

}  // namespace stfl

#endif  // STFL_PSI_PSI_HPP_
