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

#include "stfl/runner/config.hpp"

#include <fstream>
#include <set>

#include "stfl/errors.hpp"

namespace stfl {

std::string MethodName(Method method) {
  switch (method) {
    case Method::kStfl: return "stfl";
    case Method::kBaseline: return "baseline";
    case Method::kCentralized: return "centralized";
    case Method::kHierarchical: return "hierarchical";
  }
  return "unknown";
}

Method ParseMethod(const std::string& text) {
  for (Method m : {Method::kStfl, Method::kBaseline, Method::kCentralized, Method::kHierarchical}) {
    if (MethodName(m) == text) return m;
  }
  throw ValidationError("unknown method '" + text +
                        "' (expected stfl, baseline, centralized or hierarchical)");
}

void ExperimentConfig::Validate() const {
  train.Validate();
  if (vae_epochs == 0) throw ValidationError("config: vae_epochs must be positive");
  if (method == Method::kStfl && all_data) {
    throw ValidationError("config: all_data does not apply to stfl, which consumes the "
                          "self-taught split for the guest encoders");
  }
  if (method == Method::kBaseline) {
    baseline.Validate();
    if (split.guest_features.size() > 1) {
      throw ValidationError("config: the encrypted baseline supports a single guest");
    }
  }
  if (!split.host_features.empty() && split.guest_features.empty()) {
    throw ValidationError("config: split lists host features but no guest");
  }
}

nlohmann::json ConfigToJson(const ExperimentConfig& c) {
  nlohmann::json j;
  j["method"] = MethodName(c.method);
  j["dataset"] = c.dataset_name;
  j["dataset_path"] = c.dataset_path.string();
  j["id_column"] = c.id_column;
  j["label_column"] = c.label_column;
  j["split"] = {{"host", c.split.host_features}, {"guests", c.split.guest_features}};
  j["partition"] = {{"self_taught", c.partition.self_taught},
                    {"train", c.partition.train},
                    {"test", c.partition.test}};
  j["seed"] = c.seed;
  j["learning_rate"] = c.train.learning_rate;
  j["batch_size"] = c.train.batch_size;
  j["epochs"] = c.train.epochs;
  j["vae_epochs"] = c.vae_epochs;
  j["baseline"] = {{"learning_rate", c.baseline.learning_rate},
                   {"key_bits", c.baseline.key_bits},
                   {"head", c.baseline.head == OutputHead::kSoftmax ? "softmax" : "sigmoid"},
                   {"guest_hidden_multiplier", c.baseline.guest_hidden_multiplier}};
  j["all_data"] = c.all_data;
  j["transport"] = TransportKindName(c.transport);
  j["psi"] = c.psi_mode == PsiMode::kNaive ? "naive" : "blinded";
  j["latent"] = c.latent_mode == LatentMode::kSample ? "sample" : "mean";
  j["subsample"] = c.subsample;
  j["output_dir"] = c.output_dir.string();
  return j;
}

namespace {

void RequireKnown(const nlohmann::json& j, const std::set<std::string>& known,
                  const std::string& where) {
  if (!j.is_object()) throw ValidationError("config: " + where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ValidationError("config: unknown key '" + where + key + "'");
  }
}

}  // namespace

void ApplyConfigJson(ExperimentConfig& c, const nlohmann::json& j) {
  RequireKnown(j,
               {"method", "dataset", "dataset_path", "id_column", "label_column", "split",
                "partition", "seed", "learning_rate", "batch_size", "epochs", "vae_epochs",
                "baseline", "all_data", "transport", "psi", "latent", "subsample", "output_dir"},
               "");
  try {
    if (j.contains("method")) c.method = ParseMethod(j["method"].get<std::string>());
    if (j.contains("dataset")) c.dataset_name = j["dataset"].get<std::string>();
    if (j.contains("dataset_path")) c.dataset_path = j["dataset_path"].get<std::string>();
    if (j.contains("id_column")) c.id_column = j["id_column"].get<std::string>();
    if (j.contains("label_column")) c.label_column = j["label_column"].get<std::string>();
    if (j.contains("split")) {
      const auto& s = j["split"];
      RequireKnown(s, {"host", "guests"}, "split.");
      c.split.host_features = s.value("host", std::vector<std::string>{});
      c.split.guest_features = s.value("guests", std::vector<std::vector<std::string>>{});
    }
    if (j.contains("partition")) {
      const auto& p = j["partition"];
      RequireKnown(p, {"self_taught", "train", "test"}, "partition.");
      c.partition.self_taught = p.value("self_taught", c.partition.self_taught);
      c.partition.train = p.value("train", c.partition.train);
      c.partition.test = p.value("test", c.partition.test);
    }
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("learning_rate")) c.train.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("batch_size")) c.train.batch_size = j["batch_size"].get<std::size_t>();
    if (j.contains("epochs")) c.train.epochs = j["epochs"].get<std::size_t>();
    if (j.contains("vae_epochs")) c.vae_epochs = j["vae_epochs"].get<std::size_t>();
    if (j.contains("baseline")) {
      const auto& b = j["baseline"];
      RequireKnown(b, {"learning_rate", "key_bits", "head", "guest_hidden_multiplier"},
                   "baseline.");
      c.baseline.learning_rate = b.value("learning_rate", c.baseline.learning_rate);
      c.baseline.key_bits = b.value("key_bits", c.baseline.key_bits);
      c.baseline.guest_hidden_multiplier =
          b.value("guest_hidden_multiplier", c.baseline.guest_hidden_multiplier);
      if (b.contains("head")) {
        const auto head = b["head"].get<std::string>();
        if (head != "sigmoid" && head != "softmax") {
          throw ValidationError("config: baseline.head must be sigmoid or softmax");
        }
        c.baseline.head = head == "softmax" ? OutputHead::kSoftmax : OutputHead::kSigmoid;
      }
    }
    if (j.contains("all_data")) c.all_data = j["all_data"].get<bool>();
    if (j.contains("transport")) c.transport = ParseTransportKind(j["transport"].get<std::string>());
    if (j.contains("psi")) {
      const auto psi = j["psi"].get<std::string>();
      if (psi != "naive" && psi != "blinded") throw ValidationError("config: psi must be naive or blinded");
      c.psi_mode = psi == "naive" ? PsiMode::kNaive : PsiMode::kBlinded;
    }
    if (j.contains("latent")) {
      const auto latent = j["latent"].get<std::string>();
      if (latent != "mean" && latent != "sample") throw ValidationError("config: latent must be mean or sample");
      c.latent_mode = latent == "sample" ? LatentMode::kSample : LatentMode::kMean;
    }
    if (j.contains("subsample")) c.subsample = j["subsample"].get<std::size_t>();
    if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
}

ExperimentConfig LoadConfigFile(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config " + path.string() + ": " + e.what());
  }
  ApplyConfigJson(base, j);
  return base;
}

}  // namespace stfl
