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

#include "stfl/runner/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "stfl/errors.hpp"

namespace stfl {
namespace {

using nlohmann::json;

template <typename Key>
std::vector<Key> FirstAppearance(std::span<const RunReport> reports, Key (*key)(const RunReport&)) {
  std::vector<Key> out;
  for (const auto& r : reports) {
    Key k = key(r);
    if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(std::move(k));
  }
  return out;
}

std::string LabelOf(const RunReport& r) { return r.Label(); }
std::string DatasetOf(const RunReport& r) { return r.dataset; }

std::vector<RunReport> Cell(std::span<const RunReport> reports, const std::string& label,
                            const std::string& dataset) {
  std::vector<RunReport> out;
  for (const auto& r : reports) {
    if (r.Label() == label && r.dataset == dataset) out.push_back(r);
  }
  return out;
}

std::string Fixed(double value, int digits) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(digits) << value;
  return out.str();
}

std::string Pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

// Plain grid with the first column left-aligned and a dashed rule under the header.
std::string Grid(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths;
  for (const auto& row : rows) {
    widths.resize(std::max(widths.size(), row.size()), 0);
    for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
  }
  std::ostringstream out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::string line;
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      line += (c ? "  " : "") + Pad(rows[r][c], widths[c]);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t w : widths) total += w;
      out << std::string(total + 2 * (widths.size() - 1), '-') << '\n';
    }
  }
  return out.str();
}

}  // namespace

json ReportToJson(const RunReport& r) {
  return json{{"method", r.method},
              {"dataset", r.dataset},
              {"all_data", r.all_data},
              {"seed", r.seed},
              {"accuracy", r.accuracy},
              {"confusion", {{"tp", r.confusion.tp}, {"fp", r.confusion.fp},
                             {"fn", r.confusion.fn}, {"tn", r.confusion.tn}}},
              {"train_size", r.train_size},
              {"test_size", r.test_size},
              {"train_seconds", r.train_seconds},
              {"pretrain_seconds", r.pretrain_seconds},
              {"loss_curve", r.loss_curve},
              {"guest_fingerprints_before", r.guest_fingerprints_before},
              {"guest_fingerprints_after", r.guest_fingerprints_after},
              {"config", r.config}};
}

RunReport ReportFromJson(const json& j) {
  try {
    RunReport r;
    j.at("method").get_to(r.method);
    j.at("dataset").get_to(r.dataset);
    j.at("all_data").get_to(r.all_data);
    j.at("seed").get_to(r.seed);
    j.at("accuracy").get_to(r.accuracy);
    const json& c = j.at("confusion");
    c.at("tp").get_to(r.confusion.tp);
    c.at("fp").get_to(r.confusion.fp);
    c.at("fn").get_to(r.confusion.fn);
    c.at("tn").get_to(r.confusion.tn);
    j.at("train_size").get_to(r.train_size);
    j.at("test_size").get_to(r.test_size);
    j.at("train_seconds").get_to(r.train_seconds);
    j.at("pretrain_seconds").get_to(r.pretrain_seconds);
    j.at("loss_curve").get_to(r.loss_curve);
    j.at("guest_fingerprints_before").get_to(r.guest_fingerprints_before);
    j.at("guest_fingerprints_after").get_to(r.guest_fingerprints_after);
    r.config = j.value("config", json::object());
    return r;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("report: ") + e.what());
  }
}

std::string ToJsonLines(std::span<const RunReport> reports) {
  std::string out;
  for (const auto& r : reports) out += ReportToJson(r).dump() + '\n';
  return out;
}

std::vector<RunReport> ParseJsonLines(const std::string& text) {
  std::vector<RunReport> out;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ValidationError("report line " + std::to_string(number) + ": " + e.what());
    }
    out.push_back(ReportFromJson(j));
  }
  return out;
}

void AppendJsonLines(const std::filesystem::path& path, std::span<const RunReport> reports) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::app);
  if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
  out << ToJsonLines(reports);
}

std::vector<RunReport> ReadJsonLines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return ParseJsonLines(text.str());
}

std::string FormatAccuracyTable(std::span<const RunReport> reports) {
  const auto labels = FirstAppearance<std::string>(reports, LabelOf);
  const auto datasets = FirstAppearance<std::string>(reports, DatasetOf);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"Method"};
  header.insert(header.end(), datasets.begin(), datasets.end());
  rows.push_back(header);
  for (const auto& label : labels) {
    std::vector<std::string> row{label};
    for (const auto& dataset : datasets) {
      const auto cell = Cell(reports, label, dataset);
      if (cell.empty()) {
        row.push_back("-");
        continue;
      }
      const AccuracySummary s = Summarize(cell);
      std::string text = Fixed(100.0 * s.mean, 2) + "%";
      if (s.runs > 1) text += " +- " + Fixed(100.0 * s.stddev, 2) + " (n=" + std::to_string(s.runs) + ")";
      row.push_back(text);
    }
    rows.push_back(row);
  }
  return Grid(rows);
}

std::string FormatConfusionTables(std::span<const RunReport> reports) {
  std::ostringstream out;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const RunReport& r = reports[i];
    const ConfusionMatrix& c = r.confusion;
    if (i) out << '\n';
    out << r.Label() << " / " << r.dataset << " / seed " << r.seed << " (accuracy "
        << Fixed(100.0 * r.accuracy, 2) << "%, n=" << c.total() << ")\n";
    out << Grid({{"true \\ predicted", "0", "1"},
                 {"0", std::to_string(c.tn), std::to_string(c.fp)},
                 {"1", std::to_string(c.fn), std::to_string(c.tp)}});
  }
  return out.str();
}

std::string FormatTimingTable(std::span<const RunReport> reports) {
  const auto labels = FirstAppearance<std::string>(reports, LabelOf);
  const auto datasets = FirstAppearance<std::string>(reports, DatasetOf);
  std::vector<std::vector<std::string>> rows{
      {"Method", "Dataset", "Runs", "Epochs", "Train s (mean)", "VAE pre-train s (mean)"}};
  for (const auto& label : labels) {
    for (const auto& dataset : datasets) {
      const auto cell = Cell(reports, label, dataset);
      if (cell.empty()) continue;
      double train = 0.0, pretrain = 0.0;
      for (const auto& r : cell) {
        train += r.train_seconds;
        pretrain += r.pretrain_seconds;
      }
      const double n = static_cast<double>(cell.size());
      rows.push_back({label, dataset, std::to_string(cell.size()),
                      std::to_string(cell.front().loss_curve.size()), Fixed(train / n, 3),
                      pretrain > 0.0 ? Fixed(pretrain / n, 3) : "-"});
    }
  }
  return Grid(rows);
}

std::string FormatReport(std::span<const RunReport> reports) {
  return "Test accuracy\n\n" + FormatAccuracyTable(reports) + "\nConfusion matrices\n\n" +
         FormatConfusionTables(reports) + "\nTraining time\n\n" + FormatTimingTable(reports);
}

}  // namespace stfl
