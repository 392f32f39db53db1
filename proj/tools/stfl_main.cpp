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

// Command-line front end: split, train-vae, run <method>, report.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "stfl/errors.hpp"
#include "stfl/runner/experiment.hpp"
#include "stfl/runner/report.hpp"
#include "stfl/vae/vae.hpp"

namespace {

using stfl::ExperimentConfig;

std::vector<std::string> SplitList(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Flag values start from the config defaults; a --config file is applied last
// and wins over anything given on the command line.
struct CommonFlags {
  ExperimentConfig config;
  std::string config_file;
  std::string transport = "in-process";
  std::string psi = "blinded";
  std::string latent = "mean";
  std::string host_features;
  std::vector<std::string> guest_features;
  std::string dataset_path;
  std::string output_dir;

  void Register(CLI::App& app) {
    dataset_path = config.dataset_path.string();
    output_dir = config.output_dir.string();
    app.add_option("--config", config_file, "JSON config; its keys override flags");
    app.add_option("--seed", config.seed, "Seed for partition, init, shuffling, noise, keys")
        ->capture_default_str();
    app.add_option("--epochs", config.train.epochs, "Training epochs")->capture_default_str();
    app.add_option("--transport", transport, "in-process or tcp")
        ->check(CLI::IsMember({"in-process", "tcp"}))
        ->capture_default_str();
    app.add_option("--dataset", config.dataset_name, "Dataset name used in reports")
        ->capture_default_str();
    app.add_option("--dataset-path", dataset_path, "CSV file")->capture_default_str();
    app.add_option("--id-column", config.id_column)->capture_default_str();
    app.add_option("--label-column", config.label_column)->capture_default_str();
    app.add_option("--host-features", host_features, "Comma-separated host columns");
    app.add_option("--guest-features", guest_features,
                   "Comma-separated columns of one guest; repeat per guest");
    app.add_option("--vae-epochs", config.vae_epochs)->capture_default_str();
    app.add_option("--lr", config.train.learning_rate)->capture_default_str();
    app.add_option("--batch-size", config.train.batch_size)->capture_default_str();
    app.add_option("--psi", psi, "blinded or naive")
        ->check(CLI::IsMember({"blinded", "naive"}))
        ->capture_default_str();
    app.add_option("--latent", latent, "mean or sample")
        ->check(CLI::IsMember({"mean", "sample"}))
        ->capture_default_str();
    app.add_option("--key-bits", config.baseline.key_bits)->capture_default_str();
    app.add_option("--baseline-lr", config.baseline.learning_rate)->capture_default_str();
    app.add_flag("--all-data", config.all_data, "Train on self-taught + train rows");
    app.add_option("--subsample", config.subsample, "Keep this many rows (0 keeps all)")
        ->capture_default_str();
    app.add_option("--output-dir", output_dir)->capture_default_str();
  }

  ExperimentConfig Resolve() {
    ExperimentConfig c = config;
    c.dataset_path = dataset_path;
    c.output_dir = output_dir;
    c.transport = stfl::ParseTransportKind(transport);
    c.psi_mode = psi == "naive" ? stfl::PsiMode::kNaive : stfl::PsiMode::kBlinded;
    c.latent_mode = latent == "sample" ? stfl::LatentMode::kSample : stfl::LatentMode::kMean;
    if (!host_features.empty() || !guest_features.empty()) {
      c.split.host_features = SplitList(host_features);
      c.split.guest_features.clear();
      for (const auto& g : guest_features) c.split.guest_features.push_back(SplitList(g));
    }
    if (!config_file.empty()) c = stfl::LoadConfigFile(config_file, c);
    return c;
  }
};

void WriteText(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw stfl::ValidationError("cannot write " + path.string());
  out << text;
}

int Split(const ExperimentConfig& c, const std::filesystem::path& out) {
  stfl::DatasetSchema schema;
  schema.id_column = c.id_column;
  schema.label_column = c.label_column;
  const auto raw = stfl::LoadCsv(c.dataset_path, schema);
  const auto spec = c.split.host_features.empty()
                        ? stfl::VerticalSplitSpec::Default(raw.feature_names())
                        : c.split;
  const auto parties = stfl::VerticalSplit(raw, spec);
  stfl::PartitionSpec ps = c.partition;
  ps.seed = c.seed;
  const auto partition = stfl::MakePartition(raw.ids(), ps);

  std::filesystem::create_directories(out);
  stfl::WriteCsv(out / "host.csv", parties.host, c.id_column, c.label_column);
  for (std::size_t k = 0; k < parties.guests.size(); ++k) {
    stfl::WriteCsv(out / ("guest" + std::to_string(k + 1) + ".csv"), parties.guests[k],
                   c.id_column, c.label_column);
  }
  const nlohmann::json ids = {{"self_taught", partition.self_taught},
                              {"train", partition.train},
                              {"test", partition.test}};
  WriteText(out / "partition.json", ids.dump(2) + "\n");
  std::cout << "host: " << parties.host.feature_count() << " features, " << parties.host.rows()
            << " rows\n";
  for (std::size_t k = 0; k < parties.guests.size(); ++k) {
    std::cout << "guest" << k + 1 << ": " << parties.guests[k].feature_count() << " features\n";
  }
  std::cout << "partition: " << partition.self_taught.size() << " self-taught, "
            << partition.train.size() << " train, " << partition.test.size() << " test\n"
            << "written to " << out.string() << "\n";
  return 0;
}

int TrainVaeCommand(const ExperimentConfig& c, std::size_t guest, const std::filesystem::path& out) {
  const auto data = stfl::PrepareData(c);
  if (guest == 0 || guest > data.guests.size()) {
    throw stfl::ValidationError("guest index must be in 1.." + std::to_string(data.guests.size()));
  }
  const auto& party = data.guests[guest - 1];
  const auto x = party.FeaturesFor(data.partition.self_taught);
  const auto sizing = stfl::VaeSizing::ForInput(party.feature_count());
  const auto config = stfl::GuestVaeConfig(c, guest - 1);
  const auto result = stfl::TrainVae(x, sizing, config, [](std::size_t epoch, const stfl::VaeEpochStats& s) {
    std::cout << "epoch " << epoch << " loss " << s.total << " (recon " << s.recon << ", kl " << s.kl << ")\n";
  });
  const auto g = stfl::MeasureLatentGaussianity(result.model, x, config.seed);
  stfl::SaveVae(result.model, out);
  std::cout << "latent width " << sizing.latent_dim << ", aggregate KL of latent moments "
            << g.aggregate << "\nfingerprint " << stfl::ParameterFingerprint(result.model)
            << "\nsaved " << out.string() << "\n";
  return 0;
}

int RunCommand(ExperimentConfig c, const std::string& method, std::size_t runs) {
  if (!method.empty()) c.method = stfl::ParseMethod(method);
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < runs; ++i) seeds.push_back(c.seed + i);
  std::vector<stfl::RunReport> reports;
  for (std::uint64_t seed : seeds) {
    c.seed = seed;
    c.Validate();
    reports.push_back(stfl::RunExperiment(c));
    const auto& r = reports.back();
    std::cout << r.Label() << " " << r.dataset << " seed " << seed << ": accuracy "
              << 100.0 * r.accuracy << "%, train " << r.train_seconds << " s\n";
  }
  const std::string stem = stfl::MethodName(c.method) + (c.all_data ? "_all" : "") + "_" + c.dataset_name;
  stfl::AppendJsonLines(c.output_dir / (stem + ".jsonl"), reports);
  const std::string text = stfl::FormatReport(reports);
  WriteText(c.output_dir / (stem + ".txt"), text);
  std::cout << "\n" << text;
  return 0;
}

int ReportCommand(const std::vector<std::string>& files) {
  std::vector<stfl::RunReport> reports;
  for (const auto& f : files) {
    auto part = stfl::ReadJsonLines(f);
    reports.insert(reports.end(), part.begin(), part.end());
  }
  std::cout << stfl::FormatReport(reports);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-taught vertical federated learning experiments"};
  app.require_subcommand(1);

  CommonFlags split_flags, vae_flags, run_flags;
  std::string split_out = "split";
  auto* split = app.add_subcommand("split", "Write per-party CSVs and the row partition");
  split_flags.Register(*split);
  split->add_option("--out", split_out, "Output directory")->capture_default_str();

  std::size_t guest = 1;
  std::string vae_out = "guest1.vae";
  auto* train_vae = app.add_subcommand("train-vae", "Self-train one guest encoder");
  vae_flags.Register(*train_vae);
  train_vae->add_option("--guest", guest, "Guest index, 1-based")->capture_default_str();
  train_vae->add_option("--out", vae_out, "Model file")->capture_default_str();

  std::string method;
  std::size_t runs = 1;
  auto* run = app.add_subcommand("run", "Train and evaluate one method");
  run_flags.Register(*run);
  run->add_option("method", method, "stfl, baseline, centralized or hierarchical")
      ->check(CLI::IsMember({"stfl", "baseline", "centralized", "hierarchical"}));
  run->add_option("--runs", runs, "Consecutive seeds starting at --seed")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  std::vector<std::string> report_files;
  auto* report = app.add_subcommand("report", "Tabulate JSONL run reports");
  report->add_option("files", report_files, "JSONL files")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);
  try {
    if (split->parsed()) return Split(split_flags.Resolve(), split_out);
    if (train_vae->parsed()) return TrainVaeCommand(vae_flags.Resolve(), guest, vae_out);
    if (run->parsed()) return RunCommand(run_flags.Resolve(), method, runs);
    if (report->parsed()) return ReportCommand(report_files);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
