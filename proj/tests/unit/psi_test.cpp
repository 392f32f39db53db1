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

#include <gtest/gtest.h>

#include <algorithm>

#include "stfl/errors.hpp"
#include "stfl/nn/rng.hpp"

namespace stfl {
namespace {

std::vector<std::string> Ids(std::size_t begin, std::size_t end, const char* prefix = "id") {
  std::vector<std::string> out;
  for (std::size_t i = begin; i < end; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

std::vector<std::string> BruteForce(const std::vector<std::string>& a,
                                    const std::vector<std::string>& b) {
  std::vector<std::string> out;
  for (const auto& x : a) {
    for (const auto& y : b) {
      if (x == y) out.push_back(x);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

TEST(IdSetTest, RejectsDuplicates) {
  const std::vector<std::string> ids = {"a", "b", "a"};
  EXPECT_THROW(IdSet{ids}, ValidationError);
  EXPECT_EQ(IdSet({"b", "a"}).Sorted(), (std::vector<std::string>{"a", "b"}));
}

TEST(PsiTest, IdenticalSetsGiveEverything) {
  Csprng rng = Csprng::FromSeed(1);
  const auto ids = Ids(0, 20);
  for (PsiMode mode : {PsiMode::kNaive, PsiMode::kBlinded}) {
    auto expected = ids;
    std::sort(expected.begin(), expected.end());
    EXPECT_EQ(PsiIntersect(IdSet(ids), IdSet(ids), mode, rng), expected);
  }
}

TEST(PsiTest, DisjointSetsAbortNamingIdOverlap) {
  Csprng rng = Csprng::FromSeed(2);
  for (PsiMode mode : {PsiMode::kNaive, PsiMode::kBlinded}) {
    try {
      PsiIntersect(IdSet(Ids(0, 10)), IdSet(Ids(10, 20)), mode, rng);
      FAIL() << "expected SetupError";
    } catch (const SetupError& e) {
      EXPECT_EQ(e.condition(), kIdOverlapCondition);
    }
  }
}

TEST(PsiTest, PlantedOverlapMatchesBruteForce) {
  Csprng rng = Csprng::FromSeed(3);
  Rng shuffle(3);
  auto host = Ids(0, 1000, "u");
  auto guest = Ids(700, 1700, "u");  // 300 shared
  shuffle.Shuffle(host);
  shuffle.Shuffle(guest);
  const auto result = PsiIntersect(IdSet(host), IdSet(guest), PsiMode::kBlinded, rng);
  EXPECT_EQ(result.size(), 300u);
  EXPECT_EQ(result, BruteForce(host, guest));
  EXPECT_TRUE(std::is_sorted(result.begin(), result.end()));
}

TEST(PsiTest, BlindedAgreesWithNaive) {
  Csprng rng = Csprng::FromSeed(4);
  Rng pick(4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::string> host, guest;
    for (int i = 0; i < 40; ++i) {
      const std::string id = "r" + std::to_string(pick.Below(60));
      if (std::find(host.begin(), host.end(), id) == host.end()) host.push_back(id);
      const std::string gid = "r" + std::to_string(pick.Below(60));
      if (std::find(guest.begin(), guest.end(), gid) == guest.end()) guest.push_back(gid);
    }
    const auto expected = BruteForce(host, guest);
    if (expected.empty()) continue;
    EXPECT_EQ(PsiIntersect(IdSet(host), IdSet(guest), PsiMode::kBlinded, rng), expected);
    EXPECT_EQ(PsiIntersect(IdSet(host), IdSet(guest), PsiMode::kNaive, rng), expected);
  }
}

TEST(PsiTest, BlindingCommutes) {
  const auto& group = PsiGroup::Modp2048();
  Csprng rng = Csprng::FromSeed(5);
  const mpz_class a = RandomExponent(group, rng);
  const mpz_class b = RandomExponent(group, rng);
  for (const auto& id : Ids(0, 25)) {
    const mpz_class h = HashToGroup(group, id);
    EXPECT_EQ(Blind(group, Blind(group, h, a), b), Blind(group, Blind(group, h, b), a));
    // Squares land in the order-q subgroup.
    EXPECT_EQ(Blind(group, h, group.q), 1);
  }
  EXPECT_EQ(HashToGroup(group, "x"), HashToGroup(group, "x"));
  EXPECT_NE(HashToGroup(group, "x"), HashToGroup(group, "y"));
}

TEST(PsiTest, GroupElementWireFormat) {
  const auto& group = PsiGroup::Modp2048();
  const std::vector<mpz_class> elements = {HashToGroup(group, "a"), mpz_class(5)};
  const Bytes bytes = EncodeGroupElements(group, elements);
  EXPECT_EQ(bytes.size(), 8u + 2 * 256);
  EXPECT_EQ(DecodeGroupElements(group, bytes), elements);
  Bytes truncated(bytes.begin(), bytes.end() - 1);
  EXPECT_THROW(DecodeGroupElements(group, truncated), ProtocolError);
}

TEST(PsiTest, HostRejectsFabricatedIds) {
  const auto& group = PsiGroup::Modp2048();
  Csprng rng = Csprng::FromSeed(6);
  PsiHostSession host(group, IdSet({"a", "b"}), rng);
  const std::vector<std::string> reported = {"a", "zzz"};
  EXPECT_THROW(host.Accept(reported), ProtocolError);
  EXPECT_THROW(PsiGuestSession(group, IdSet(), rng), ValidationError);
}

}  // namespace
}  // namespace stfl
