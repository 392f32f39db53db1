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

#ifndef STFL_RUNNER_CONFIG_HPP_
#define STFL_RUNNER_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "stfl/baseline/vfl.hpp"
#include "stfl/data/dataset.hpp"
#include "stfl/net/transport.hpp"
#include "stfl/nn/adam.hpp"
#include "stfl/protocol/stfl.hpp"

namespace stfl {

enum class Method { kStfl, kBaseline, kCentralized, kHierarchical };
std::string MethodName(Method method);
Method ParseMethod(const std::string& text);

struct ExperimentConfig {
  Method method = Method::kStfl;
  std::string dataset_name = "cancer";
  std::filesystem::path dataset_path = "data/cancer.csv";
  std::string id_column = "id";
  std::string label_column = "y";
  // Empty host list: host takes the first ceil(d / 2) features.
  VerticalSplitSpec split;
  PartitionSpec partition;
  std::uint64_t seed = 0;  // feeds partition, initialization, shuffling, noise, keys
  TrainConfig train;       // master model / centralized / hierarchical
  std::size_t vae_epochs = 100;
  BaselineConfig baseline;
  bool all_data = false;
  TransportKind transport = TransportKind::kInProcess;
  PsiMode psi_mode = PsiMode::kBlinded;
  LatentMode latent_mode = LatentMode::kMean;
  std::size_t subsample = 0;  // 0 keeps every row
  std::filesystem::path output_dir = "runs";

  void Validate() const;
};

nlohmann::json ConfigToJson(const ExperimentConfig& config);
// Overwrites only the keys present in `json`; unknown keys are rejected.
void ApplyConfigJson(ExperimentConfig& config, const nlohmann::json& json);
ExperimentConfig LoadConfigFile(const std::filesystem::path& path, ExperimentConfig base = {});

}  // namespace stfl

#endif  // STFL_RUNNER_CONFIG_HPP_
