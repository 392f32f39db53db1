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

#ifndef STFL_RUNNER_REPORT_HPP_
#define STFL_RUNNER_REPORT_HPP_

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "stfl/runner/experiment.hpp"

namespace stfl {

nlohmann::json ReportToJson(const RunReport& report);
RunReport ReportFromJson(const nlohmann::json& json);

// One JSON object per line.
std::string ToJsonLines(std::span<const RunReport> reports);
std::vector<RunReport> ParseJsonLines(const std::string& text);
void AppendJsonLines(const std::filesystem::path& path, std::span<const RunReport> reports);
std::vector<RunReport> ReadJsonLines(const std::filesystem::path& path);

// Accuracy: one row per method label, one column per dataset, both in order
// of first appearance. Several seeds in a cell print as mean +- std.
std::string FormatAccuracyTable(std::span<const RunReport> reports);
// 2x2 counts per run, true class down, predicted class across, label 0 first.
std::string FormatConfusionTables(std::span<const RunReport> reports);
// Mean training seconds per method and dataset, VAE pre-training alongside.
std::string FormatTimingTable(std::span<const RunReport> reports);
std::string FormatReport(std::span<const RunReport> reports);

}  // namespace stfl

#endif  // STFL_RUNNER_REPORT_HPP_
