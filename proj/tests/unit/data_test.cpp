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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "stfl/data/dataset.hpp"
#include "stfl/errors.hpp"

namespace stfl {
namespace {

const std::filesystem::path kCancer = std::filesystem::path(STFL_DATA_DIR) / "cancer.csv";

PartyDataset Cancer() {
  DatasetSchema schema;
  schema.label_column = "y";
  return LoadCsv(kCancer, schema);
}

TEST(Csv, LoadsCancerTable) {
  const auto d = Cancer();
  EXPECT_EQ(d.rows(), 569u);
  EXPECT_EQ(d.feature_count(), 30u);
  const auto& y = d.labels();
  // 212 malignant (label 0), 357 benign (label 1).
  EXPECT_EQ(std::count(y.begin(), y.end(), 1.0), 357);
  EXPECT_EQ(d.ids().front(), "c0000");
}

TEST(Csv, RejectsMalformedInput) {
  DatasetSchema schema;
  schema.label_column = "y";
  EXPECT_THROW(ParseCsv("id,y,a\nx,1,\n", schema), ValidationError);
  EXPECT_THROW(ParseCsv("id,y,a\nx,1,NA\n", schema), ValidationError);
  EXPECT_THROW(ParseCsv("id,y,a\nx,1,abc\n", schema), ValidationError);
  EXPECT_THROW(ParseCsv("id,y,a\nx,1,1\nx,0,2\n", schema), ValidationError);
  EXPECT_THROW(ParseCsv("id,y,a\nx,2,1\n", schema), ValidationError);
  EXPECT_THROW(ParseCsv("id,a\nx,1\n", schema), ValidationError);
  EXPECT_THROW(ParseCsv("id,y,a\nx,1\n", schema), ValidationError);
  const auto ok = ParseCsv("id,y,a,\"b\"\r\nx,1,1.5,-2e1\r\n", schema);
  EXPECT_EQ(ok.features()(0, 1), -20.0);
  EXPECT_EQ(ok.feature_names()[1], "b");
}

TEST(Csv, WriteThenReadIsIdentity) {
  const auto d = Cancer();
  const auto path = std::filesystem::temp_directory_path() / "stfl_data_roundtrip.csv";
  WriteCsv(path, d);
  DatasetSchema schema;
  schema.label_column = "y";
  const auto back = LoadCsv(path, schema);
  EXPECT_EQ(back.ids(), d.ids());
  EXPECT_EQ(back.labels(), d.labels());
  EXPECT_EQ(back.features(), d.features());
  std::filesystem::remove(path);
}

TEST(Partition, CancerSizesAndDisjointness) {
  const auto d = Cancer();
  const auto p = MakePartition(d.ids(), {});
  EXPECT_EQ(p.self_taught.size(), 227u);
  EXPECT_EQ(p.train.size(), 227u);
  EXPECT_EQ(p.test.size(), 115u);
  std::set<std::string> all;
  for (const auto* part : {&p.self_taught, &p.train, &p.test}) all.insert(part->begin(), part->end());
  EXPECT_EQ(all.size(), 569u);
}

TEST(Partition, PropertyOverSizesAndSeeds) {
  for (std::size_t n = 5; n < 300; n += 17) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back("s" + std::to_string(i));
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const auto p = MakePartition(ids, {0.4, 0.4, 0.2, seed});
      EXPECT_EQ(p.self_taught.size(), static_cast<std::size_t>(std::floor(0.4 * n)));
      EXPECT_EQ(p.self_taught.size() + p.train.size() + p.test.size(), n);
      std::set<std::string> all(p.self_taught.begin(), p.self_taught.end());
      all.insert(p.train.begin(), p.train.end());
      all.insert(p.test.begin(), p.test.end());
      EXPECT_EQ(all.size(), n);
    }
  }
}

TEST(Partition, DeterministicAndOrderIndependent) {
  const auto d = Cancer();
  auto reversed = d.ids();
  std::reverse(reversed.begin(), reversed.end());
  const auto a = MakePartition(d.ids(), {0.4, 0.4, 0.2, 7});
  const auto b = MakePartition(reversed, {0.4, 0.4, 0.2, 7});
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  const auto c = MakePartition(d.ids(), {0.4, 0.4, 0.2, 8});
  EXPECT_NE(a.train, c.train);
}

TEST(Partition, RejectsBadInput) {
  std::vector<std::string> few = {"a", "b", "c", "d"};
  EXPECT_THROW(MakePartition(few, {}), ValidationError);
  std::vector<std::string> ids = {"a", "b", "c", "d", "e", "f"};
  EXPECT_THROW(MakePartition(ids, {0.5, 0.5, 0.5, 0}), ValidationError);
  ids.push_back("a");
  EXPECT_THROW(MakePartition(ids, {}), ValidationError);
}

TEST(VerticalSplit, ProjectionsReassembleTheTable) {
  const auto d = Cancer();
  const auto spec = VerticalSplitSpec::Default(d.feature_names());
  EXPECT_EQ(spec.host_features.size(), 15u);
  EXPECT_EQ(spec.guest_features.at(0).size(), 15u);
  const auto parties = VerticalSplit(d, spec);
  EXPECT_TRUE(parties.host.has_labels());
  EXPECT_FALSE(parties.guests[0].has_labels());
  const Matrix2D joined[] = {parties.host.features(), parties.guests[0].features()};
  EXPECT_EQ(HConcat(joined), d.features());
}

TEST(VerticalSplit, OddWidthGivesHostTheExtraColumn) {
  std::vector<std::string> f = {"a", "b", "c"};
  const auto spec = VerticalSplitSpec::Default(f);
  EXPECT_EQ(spec.host_features.size(), 2u);
}

TEST(VerticalSplit, AbortsWhenGuestAddsNothing) {
  const auto d = Cancer();
  VerticalSplitSpec spec;
  spec.host_features = d.feature_names();
  spec.guest_features = {{}};
  try {
    VerticalSplit(d, spec);
    FAIL() << "expected SetupError";
  } catch (const SetupError& e) {
    EXPECT_EQ(e.condition(), kNewFeatureCondition);
  }
  std::vector<std::string> host = {"a", "b"};
  std::vector<std::vector<std::string>> guests = {{"a"}};
  EXPECT_THROW(ValidateNewFeatures(host, guests), SetupError);
  guests = {{"a", "c"}};
  EXPECT_NO_THROW(ValidateNewFeatures(host, guests));
}

TEST(VerticalSplit, RejectsOverlapsAndGaps) {
  const auto d = Cancer();
  auto spec = VerticalSplitSpec::Default(d.feature_names());
  spec.guest_features[0].push_back(spec.host_features[0]);
  EXPECT_THROW(spec.Validate(d.feature_names()), ValidationError);
  spec = VerticalSplitSpec::Default(d.feature_names());
  spec.host_features.pop_back();
  EXPECT_THROW(spec.Validate(d.feature_names()), ValidationError);
}

TEST(Standardize, TrainStatsGiveUnitMoments) {
  const auto d = Cancer();
  const auto p = MakePartition(d.ids(), {});
  const auto stats = ComputeStats(d, p.train);
  const auto train = Standardize(d.Subset(p.train), stats);
  for (std::size_t c = 0; c < train.feature_count(); ++c) {
    double m = 0, v = 0;
    for (std::size_t r = 0; r < train.rows(); ++r) m += train.features()(r, c);
    m /= train.rows();
    for (std::size_t r = 0; r < train.rows(); ++r) v += std::pow(train.features()(r, c) - m, 2);
    v /= train.rows();
    EXPECT_NEAR(m, 0.0, 1e-12);
    EXPECT_NEAR(v, 1.0, 1e-10);
  }
}

TEST(Standardize, ConstantColumnStaysFinite) {
  DatasetSchema schema;
  const auto d = ParseCsv("id,a\nx,3\ny,3\n", schema);
  const auto stats = ComputeStats(d, d.ids());
  EXPECT_EQ(stats.stddev[0], 1e-8);
  const auto s = Standardize(d, stats);
  EXPECT_EQ(s.features()(0, 0), 0.0);
}

TEST(Dataset, UnknownIdIsNamed) {
  const auto d = Cancer();
  std::vector<std::string> ids = {"c0001", "nope"};
  try {
    d.FeaturesFor(ids);
    FAIL();
  } catch (const ProtocolError& e) {
    EXPECT_NE(std::string(e.what()).find("nope"), std::string::npos);
  }
}

}  // namespace
}  // namespace stfl
