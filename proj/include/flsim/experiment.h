// Copyright 2026 The flsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// JSON experiment configuration and the data/model it describes.

#ifndef FLSIM_EXPERIMENT_H_
#define FLSIM_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "flsim/data_pipeline.h"
#include "flsim/federation_config.h"
#include "flsim/fl_engine.h"
#include "flsim/nn_core.h"

namespace flsim {

struct SyntheticSource {
  int classes = 10;
  int dim = 20;
  int per_class = 300;
  double spread = 0.3;
};
struct IdxSource {
  std::string images;
  std::string labels;
};

struct DataConfig {
  std::variant<SyntheticSource, IdxSource> source = SyntheticSource{};
  // Seed of every data-construction stream; the master seed when unset.
  std::optional<uint64_t> seed;
  double pool_fraction = 0.05;
  double test_fraction = 0.10;
  // 0 selects the IID split, otherwise label-sorted shards per client.
  int shards_per_client = 0;
  int malicious_size = 1;
  std::optional<int> target_class;
};

struct ModelConfig {
  std::vector<int> hidden;
  Activation activation = Activation::kRelu;
  LossKind loss = LossKind::kSoftmaxCrossEntropy;
};

struct ExperimentConfig {
  FederationConfig federation;
  DataConfig data;
  ModelConfig model;
  int horizon = 10;  // rounds watched after an adversarial round
  std::string output_dir;
  bool capture_trajectories = false;
};

// Parses and validates a config document. Unknown keys are rejected. Errors
// are ConfigError/ParseError naming the dotted field path.
ExperimentConfig ExperimentFromJson(const nlohmann::ordered_json& doc);
ExperimentConfig LoadExperiment(const std::filesystem::path& path);

// Complete, normalized form of `cfg`. Feeding it back reproduces the run.
nlohmann::ordered_json ExperimentToJson(const ExperimentConfig& cfg);

struct ExperimentSetup {
  ModelSpecPtr model;
  FederatedData data;
};

// Builds the dataset, holdouts, partition, malicious set and model spec.
ExperimentSetup BuildExperiment(const ExperimentConfig& cfg);

// The full synthetic dataset before any holdout is carved off.
Dataset GenerateData(const ExperimentConfig& cfg);

}  // namespace flsim

#endif  // FLSIM_EXPERIMENT_H_
