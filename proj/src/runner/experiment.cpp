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

#include "stfl/runner/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

#include "stfl/errors.hpp"
#include "stfl/nn/classifier.hpp"
#include "stfl/nn/loss.hpp"
#include "stfl/nn/rng.hpp"
#include "stfl/vae/vae.hpp"

namespace stfl {
namespace {

constexpr std::uint64_t kSubsampleSalt = 77;
constexpr std::uint64_t kVaeSeedSalt = 60;
constexpr std::uint64_t kLatentSampleSalt = 50;
constexpr std::uint64_t kEncoderInitSalt = 70;

using Clock = std::chrono::steady_clock;

double SecondsSince(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

TrainConfig SeededTrain(const ExperimentConfig& config) {
  TrainConfig t = config.train;
  t.seed = config.seed;
  return t;
}

RunReport NewReport(const ExperimentConfig& config, const PreparedData& data) {
  RunReport r;
  r.method = MethodName(config.method);
  r.dataset = config.dataset_name;
  r.all_data = config.all_data;
  r.seed = config.seed;
  r.train_size = data.train_ids.size();
  r.test_size = data.test_ids.size();
  r.config = ConfigToJson(config);
  return r;
}

void Score(RunReport& report, const Matrix2D& predictions, const Matrix2D& labels) {
  const Metrics m = ComputeMetrics(predictions, labels);
  report.accuracy = m.accuracy;
  report.confusion = m.confusion;
}

}  // namespace

double ConfusionMatrix::accuracy() const {
  if (total() == 0) return 0.0;
  return static_cast<double>(tp + tn) / static_cast<double>(total());
}

Metrics ComputeMetrics(const Matrix2D& predictions, const Matrix2D& labels, double threshold) {
  if (predictions.rows() != labels.rows() || predictions.cols() != 1 || labels.cols() != 1) {
    throw ShapeError("metrics: predictions " + predictions.ShapeString() + " vs labels " +
                     labels.ShapeString());
  }
  Metrics m;
  for (std::size_t r = 0; r < labels.rows(); ++r) {
    const double p = predictions(r, 0);
    const double y = labels(r, 0);
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("metrics: prediction outside [0, 1]");
    if (y != 0.0 && y != 1.0) throw ValidationError("metrics: label outside {0, 1}");
    const bool predicted = p >= threshold;
    if (y == 1.0) {
      predicted ? ++m.confusion.tp : ++m.confusion.fn;
    } else {
      predicted ? ++m.confusion.fp : ++m.confusion.tn;
    }
  }
  m.accuracy = m.confusion.accuracy();
  return m;
}

std::string RunReport::Label() const {
  std::string name = method == "stfl"           ? "STFL"
                     : method == "baseline"     ? "Encrypted baseline"
                     : method == "centralized"  ? "Centralized"
                     : method == "hierarchical" ? "Hierarchical"
                                                : method;
  return all_data ? name + " (all data)" : name;
}

PreparedData PrepareData(const ExperimentConfig& config) {
  DatasetSchema schema;
  schema.id_column = config.id_column;
  schema.label_column = config.label_column;
  PartyDataset raw = LoadCsv(config.dataset_path, schema);
  if (config.subsample > 0 && config.subsample < raw.rows()) {
    std::vector<std::string> ids = raw.ids();
    std::sort(ids.begin(), ids.end());
    Rng rng(Rng::Derive(config.seed, kSubsampleSalt));
    rng.Shuffle(ids);
    ids.resize(config.subsample);
    raw = raw.Subset(ids);
  }
  PartitionSpec partition = config.partition;
  partition.seed = config.seed;

  PreparedData data;
  data.partition = MakePartition(raw.ids(), partition);
  data.train_ids = data.partition.train;
  if (config.all_data) {
    data.train_ids.insert(data.train_ids.begin(), data.partition.self_taught.begin(),
                          data.partition.self_taught.end());
  }
  data.test_ids = data.partition.test;

  const VerticalSplitSpec spec = config.split.host_features.empty()
                                     ? VerticalSplitSpec::Default(raw.feature_names())
                                     : config.split;
  const VerticalParties parties = VerticalSplit(raw, spec);
  std::vector<std::string> labelled = data.train_ids;
  labelled.insert(labelled.end(), data.test_ids.begin(), data.test_ids.end());
  data.host = Standardize(parties.host.Subset(labelled), ComputeStats(parties.host, data.train_ids));
  for (const auto& g : parties.guests) {
    data.guests.push_back(Standardize(g, ComputeStats(g, data.train_ids)));
  }
  data.combined = Standardize(raw, ComputeStats(raw, data.train_ids));
  return data;
}

TrainConfig GuestVaeConfig(const ExperimentConfig& config, std::size_t guest) {
  TrainConfig vae = config.train;
  vae.epochs = config.vae_epochs;
  vae.seed = Rng::Derive(config.seed, kVaeSeedSalt + guest);
  return vae;
}

RunReport RunCentralized(const ExperimentConfig& config, const PreparedData& data) {
  RunReport report = NewReport(config, data);
  const PartyDataset& all = data.combined;
  const FeatureSource features = [&](std::span<const std::string> ids) {
    return all.FeaturesFor(ids);
  };
  const TrainConfig train = SeededTrain(config);
  const auto result = TrainClassifier(all.feature_count(), data.train_ids,
                                      all.LabelsFor(data.train_ids), features, train);
  report.train_seconds = result.seconds;
  for (const auto& e : result.history) report.loss_curve.push_back(e.loss);
  Score(report, PredictClassifier(result.model, data.test_ids, features, train.batch_size),
        all.LabelsFor(data.test_ids));
  return report;
}

namespace {

// Guest encoders (VAE encoder shape, posterior mean used as output) trained
// jointly with the host head by plain backpropagation across the boundary.
struct Hierarchy {
  std::vector<MlpModel> encoders;
  std::vector<std::size_t> latent;
  MlpModel head;
};

Matrix2D HierarchyInput(const Hierarchy& h, const PreparedData& data,
                        std::span<const std::string> ids, std::vector<ForwardCache>* caches) {
  std::vector<Matrix2D> parts;
  parts.push_back(data.host.FeaturesFor(ids));
  for (std::size_t k = 0; k < h.encoders.size(); ++k) {
    const Matrix2D x = data.guests[k].FeaturesFor(ids);
    if (caches) {
      auto [out, cache] = Forward(h.encoders[k], x);
      caches->push_back(std::move(cache));
      parts.push_back(out.Columns(0, h.latent[k]));
    } else {
      parts.push_back(Predict(h.encoders[k], x).Columns(0, h.latent[k]));
    }
  }
  return HConcat(parts);
}

}  // namespace

RunReport RunHierarchical(const ExperimentConfig& config, const PreparedData& data) {
  RunReport report = NewReport(config, data);
  const TrainConfig train = SeededTrain(config);
  Hierarchy h;
  std::size_t width = data.host.feature_count();
  for (std::size_t k = 0; k < data.guests.size(); ++k) {
    const VaeSizing sizing = VaeSizing::ForInput(data.guests[k].feature_count());
    h.encoders.push_back(MakeVae(sizing).encoder);
    Rng rng(Rng::Derive(config.seed, kEncoderInitSalt + k));
    InitializeGlorot(h.encoders.back(), rng);
    h.latent.push_back(sizing.latent_dim);
    report.guest_fingerprints_before.push_back(ParameterFingerprint(h.encoders.back()));
    width += sizing.latent_dim;
  }
  h.head = MakeClassifier(width);
  Rng init_rng(Rng::Derive(train.seed, kInitSalt));
  Rng shuffle_rng(Rng::Derive(train.seed, kShuffleSalt));
  InitializeGlorot(h.head, init_rng);

  const auto started = Clock::now();
  const Matrix2D labels = data.host.LabelsFor(data.train_ids);
  const double n = static_cast<double>(data.train_ids.size());
  AdamState adam;
  for (std::size_t epoch = 0; epoch < train.epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (const auto& batch : ShuffledBatches(data.train_ids.size(), train.batch_size, shuffle_rng)) {
      std::vector<std::string> ids;
      for (std::size_t i : batch) ids.push_back(data.train_ids[i]);
      std::vector<ForwardCache> caches;
      const Matrix2D input = HierarchyInput(h, data, ids, &caches);
      auto [output, cache] = Forward(h.head, input);
      const LossResult loss = BceLoss(output, labels.SelectRows(batch));
      if (!std::isfinite(loss.value)) throw NumericalError("hierarchical: non-finite loss");
      epoch_loss += loss.value * static_cast<double>(batch.size()) / n;
      const MlpGradients head_grads = Backward(h.head, cache, loss.gradient);

      auto params = ParameterViews(h.head);
      auto grads = GradientViews(head_grads);
      std::vector<MlpGradients> encoder_grads;
      std::size_t offset = data.host.feature_count();
      for (std::size_t k = 0; k < h.encoders.size(); ++k) {
        // Only the mean columns feed the head; the log-variance half gets zero.
        Matrix2D upstream(ids.size(), 2 * h.latent[k]);
        for (std::size_t r = 0; r < ids.size(); ++r) {
          for (std::size_t j = 0; j < h.latent[k]; ++j) {
            upstream(r, j) = head_grads.input(r, offset + j);
          }
        }
        offset += h.latent[k];
        encoder_grads.push_back(Backward(h.encoders[k], caches[k], upstream));
      }
      for (std::size_t k = 0; k < h.encoders.size(); ++k) {
        auto p = ParameterViews(h.encoders[k]);
        auto g = GradientViews(encoder_grads[k]);
        params.insert(params.end(), p.begin(), p.end());
        grads.insert(grads.end(), g.begin(), g.end());
      }
      AdamStep(params, grads, adam, train.learning_rate);
    }
    report.loss_curve.push_back(epoch_loss);
  }
  report.train_seconds = SecondsSince(started);
  for (const auto& e : h.encoders) report.guest_fingerprints_after.push_back(ParameterFingerprint(e));

  Matrix2D predictions(data.test_ids.size(), 1);
  for (std::size_t begin = 0; begin < data.test_ids.size(); begin += train.batch_size) {
    const auto chunk = std::span(data.test_ids)
                           .subspan(begin, std::min(train.batch_size, data.test_ids.size() - begin));
    const Matrix2D p = Predict(h.head, HierarchyInput(h, data, chunk, nullptr));
    for (std::size_t r = 0; r < chunk.size(); ++r) predictions(begin + r, 0) = p(r, 0);
  }
  Score(report, predictions, data.host.LabelsFor(data.test_ids));
  return report;
}

RunReport RunStfl(const ExperimentConfig& config, const PreparedData& data) {
  RunReport report = NewReport(config, data);
  std::vector<GuestParty> guests;
  guests.reserve(data.guests.size());
  const auto pretrain_started = Clock::now();
  for (std::size_t k = 0; k < data.guests.size(); ++k) {
    guests.emplace_back(static_cast<std::uint8_t>(k + 1), data.guests[k]);
    guests.back().SelfTrain(data.partition.self_taught, GuestVaeConfig(config, k));
    guests.back().SetLatentMode(config.latent_mode, Rng::Derive(config.seed, kLatentSampleSalt + k));
    report.guest_fingerprints_before.push_back(guests.back().Fingerprint());
  }
  report.pretrain_seconds = SecondsSince(pretrain_started);

  HostParty host(data.host);
  std::vector<GuestParty*> pointers;
  for (auto& g : guests) pointers.push_back(&g);
  StflSessionOptions options;
  options.transport = config.transport;
  options.psi_mode = config.psi_mode;
  options.psi_seed = config.seed;
  options.train = SeededTrain(config);
  options.train_ids = data.train_ids;
  options.predict_ids = data.test_ids;
  const StflSessionResult result = RunStflSession(host, pointers, options);

  report.train_seconds = result.joint.seconds;
  for (const auto& e : result.joint.classifier.history) report.loss_curve.push_back(e.loss);
  for (const auto& g : guests) report.guest_fingerprints_after.push_back(g.Fingerprint());
  Score(report, result.predictions, data.host.LabelsFor(data.test_ids));
  return report;
}

RunReport RunBaselineMethod(const ExperimentConfig& config, const PreparedData& data) {
  if (data.guests.size() != 1) throw ValidationError("baseline: exactly one guest is supported");
  RunReport report = NewReport(config, data);
  BaselineRunOptions options;
  options.config = config.baseline;
  options.config.epochs = config.train.epochs;
  options.config.batch_size = config.train.batch_size;
  options.config.seed = config.seed;
  options.transport = config.transport;
  options.train_ids = data.train_ids;
  options.predict_ids = data.test_ids;
  const BaselineRunResult result = RunBaseline(data.host, data.guests[0], options);
  report.train_seconds = result.seconds;
  for (const auto& e : result.history) report.loss_curve.push_back(e.loss);
  Score(report, result.predictions, data.host.LabelsFor(data.test_ids));
  return report;
}

RunReport RunExperiment(const ExperimentConfig& config) {
  config.Validate();
  const PreparedData data = PrepareData(config);
  switch (config.method) {
    case Method::kStfl: return RunStfl(config, data);
    case Method::kBaseline: return RunBaselineMethod(config, data);
    case Method::kCentralized: return RunCentralized(config, data);
    case Method::kHierarchical: return RunHierarchical(config, data);
  }
  throw ContractError("unreachable method");
}

std::vector<RunReport> RunSeeds(ExperimentConfig config, std::span<const std::uint64_t> seeds) {
  std::vector<RunReport> reports;
  for (std::uint64_t seed : seeds) {
    config.seed = seed;
    reports.push_back(RunExperiment(config));
  }
  return reports;
}

AccuracySummary Summarize(std::span<const RunReport> reports) {
  AccuracySummary s;
  s.runs = reports.size();
  if (reports.empty()) return s;
  for (const auto& r : reports) s.mean += r.accuracy;
  s.mean /= static_cast<double>(reports.size());
  if (reports.size() > 1) {
    double ss = 0.0;
    for (const auto& r : reports) ss += (r.accuracy - s.mean) * (r.accuracy - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(reports.size() - 1));
  }
  return s;
}

}  // namespace stfl
