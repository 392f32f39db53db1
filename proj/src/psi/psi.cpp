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

#include "stfl/psi/psi.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "stfl/crypto/sha256.hpp"
#include "stfl/errors.hpp"

namespace stfl {
namespace {

constexpr const char* kModp2048Hex =
    "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74"
    "020BBEA63B139B22514A08798E3404DDEF9519B3CD3A431B302B0A6DF25F1437"
    "4FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED"
    "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3DC2007CB8A163BF05"
    "98DA48361C55D39A69163FA8FD24CF5F83655D23DCA3AD961C62F356208552BB"
    "9ED529077096966D670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B"
    "E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9DE2BCBF695581718"
    "3995497CEA956AE515D2261898FA051015728E5A8AACAA68FFFFFFFFFFFFFFFF";

std::string ElementKey(const mpz_class& v) { return v.get_str(16); }

}  // namespace

IdSet::IdSet(std::span<const std::string> ids) {
  for (const auto& id : ids) {
    if (!ids_.insert(id).second) throw ValidationError("IdSet: duplicate ID '" + id + "'");
  }
}

IdSet::IdSet(std::initializer_list<std::string> ids)
    : IdSet(std::span<const std::string>(ids.begin(), ids.size())) {}

const PsiGroup& PsiGroup::Modp2048() {
  static const PsiGroup group = [] {
    PsiGroup g;
    g.p = mpz_class(kModp2048Hex, 16);
    g.q = (g.p - 1) / 2;
    g.element_bytes = 256;
    return g;
  }();
  return group;
}

mpz_class HashToGroup(const PsiGroup& group, std::string_view id) {
  const std::size_t bytes_needed = group.element_bytes;
  for (std::uint32_t attempt = 0;; ++attempt) {
    Bytes expanded;
    for (std::uint32_t block = 0; expanded.size() < bytes_needed; ++block) {
      ByteWriter tag;
      tag.U32Be(attempt);
      tag.U32Be(block);
      const Digest d =
          Sha256().Update("stfl-psi-h2g").Update(tag.bytes()).Update(id).Finish();
      expanded.insert(expanded.end(), d.begin(), d.end());
    }
    expanded.resize(bytes_needed);
    mpz_class x;
    mpz_import(x.get_mpz_t(), expanded.size(), 1, 1, 1, 0, expanded.data());
    if (x > 1 && x < group.p - 1) return (x * x) % group.p;
  }
}

mpz_class RandomExponent(const PsiGroup& group, Csprng& rng) {
  mpz_class e;
  do {
    e = rng.RandomBits(group.exponent_bits) % group.q;
  } while (e == 0);
  return e;
}

mpz_class Blind(const PsiGroup& group, const mpz_class& element, const mpz_class& exponent) {
  mpz_class out;
  mpz_powm(out.get_mpz_t(), element.get_mpz_t(), exponent.get_mpz_t(), group.p.get_mpz_t());
  return out;
}

Bytes EncodeGroupElements(const PsiGroup& group, std::span<const mpz_class> elements) {
  ByteWriter out;
  out.U32Le(static_cast<std::uint32_t>(elements.size()));
  out.U32Le(static_cast<std::uint32_t>(group.element_bytes));
  Bytes cell(group.element_bytes);
  for (const auto& e : elements) {
    if (e <= 0 || e >= group.p) throw ProtocolError("group element out of range");
    std::fill(cell.begin(), cell.end(), 0);
    std::size_t written = 0;
    const std::size_t size = (mpz_sizeinbase(e.get_mpz_t(), 2) + 7) / 8;
    mpz_export(cell.data() + (cell.size() - size), &written, 1, 1, 1, 0, e.get_mpz_t());
    out.Raw(cell);
  }
  return out.Take();
}

std::vector<mpz_class> DecodeGroupElements(const PsiGroup& group,
                                           std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  const std::uint32_t count = in.U32Le();
  const std::uint32_t width = in.U32Le();
  if (width != group.element_bytes) {
    throw ProtocolError("group element width " + std::to_string(width) + " != " +
                        std::to_string(group.element_bytes));
  }
  std::vector<mpz_class> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    auto cell = in.Take(width);
    mpz_class v;
    mpz_import(v.get_mpz_t(), cell.size(), 1, 1, 1, 0, cell.data());
    if (v <= 0 || v >= group.p) throw ProtocolError("group element out of range");
    out.push_back(std::move(v));
  }
  if (!in.done()) throw ProtocolError("trailing bytes after group elements");
  return out;
}

PsiGuestSession::PsiGuestSession(const PsiGroup& group, const IdSet& ids, Csprng& rng)
    : group_(group), ids_(ids.Sorted()), exponent_(RandomExponent(group, rng)) {
  if (ids_.empty()) throw ValidationError("PSI: guest ID set is empty");
}

std::vector<mpz_class> PsiGuestSession::BlindOwn() const {
  std::vector<mpz_class> out;
  out.reserve(ids_.size());
  for (const auto& id : ids_) out.push_back(Blind(group_, HashToGroup(group_, id), exponent_));
  return out;
}

std::vector<std::string> PsiGuestSession::Intersect(
    std::span<const mpz_class> own_double, std::span<const mpz_class> host_single) const {
  if (own_double.size() != ids_.size()) {
    throw ProtocolError("PSI: host returned " + std::to_string(own_double.size()) +
                        " re-blinded IDs, expected " + std::to_string(ids_.size()));
  }
  std::set<std::string> host_double;
  for (const auto& h : host_single) host_double.insert(ElementKey(Blind(group_, h, exponent_)));
  std::vector<std::string> shared;
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (host_double.count(ElementKey(own_double[i]))) shared.push_back(ids_[i]);
  }
  return shared;
}

PsiHostSession::PsiHostSession(const PsiGroup& group, const IdSet& ids, Csprng& rng)
    : group_(group), ids_(ids), exponent_(RandomExponent(group, rng)) {
  if (ids_.empty()) throw ValidationError("PSI: host ID set is empty");
}

std::vector<mpz_class> PsiHostSession::Reblind(std::span<const mpz_class> guest_single) const {
  std::vector<mpz_class> out;
  out.reserve(guest_single.size());
  for (const auto& g : guest_single) out.push_back(Blind(group_, g, exponent_));
  return out;
}

std::vector<mpz_class> PsiHostSession::BlindOwn(Csprng& rng) const {
  std::vector<mpz_class> out;
  for (const auto& id : ids_.Sorted()) {
    out.push_back(Blind(group_, HashToGroup(group_, id), exponent_));
  }
  for (std::size_t i = out.size(); i > 1; --i) {
    std::swap(out[i - 1], out[rng.NextU64() % i]);
  }
  return out;
}

std::vector<std::string> PsiHostSession::Accept(std::span<const std::string> reported) const {
  std::vector<std::string> out(reported.begin(), reported.end());
  for (const auto& id : out) {
    if (!ids_.contains(id)) {
      throw ProtocolError("PSI: guest reported ID '" + id + "' that the host does not hold");
    }
  }
  std::sort(out.begin(), out.end());
  if (std::adjacent_find(out.begin(), out.end()) != out.end()) {
    throw ProtocolError("PSI: guest reported a duplicate ID");
  }
  if (out.empty()) {
    throw SetupError(kIdOverlapCondition, "host and guest share no sample IDs");
  }
  return out;
}

std::vector<std::string> PsiIntersect(const IdSet& host_ids, const IdSet& guest_ids,
                                      PsiMode mode, Csprng& rng, const PsiGroup& group) {
  if (mode == PsiMode::kNaive) {
    std::map<std::string, std::string> host_hashes;
    for (const auto& id : host_ids.Sorted()) {
      host_hashes.emplace(ToHex(Sha256().Update(id).Finish()), id);
    }
    std::vector<std::string> shared;
    for (const auto& id : guest_ids.Sorted()) {
      if (host_hashes.count(ToHex(Sha256().Update(id).Finish()))) shared.push_back(id);
    }
    if (shared.empty()) {
      throw SetupError(kIdOverlapCondition, "host and guest share no sample IDs");
    }
    return shared;
  }
  PsiGuestSession guest(group, guest_ids, rng);
  PsiHostSession host(group, host_ids, rng);
  const auto guest_single = guest.BlindOwn();
  const auto guest_double = host.Reblind(guest_single);
  const auto host_single = host.BlindOwn(rng);
  return host.Accept(guest.Intersect(guest_double, host_single));
}

}  // namespace stfl
