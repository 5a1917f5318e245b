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

#ifndef FLSIM_DATA_PIPELINE_H_
#define FLSIM_DATA_PIPELINE_H_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "flsim/nn_core.h"
#include "flsim/rng.h"

namespace flsim {

struct Dataset {
  Matrix inputs;  // [n x dim]
  std::vector<int> labels;
  int num_classes = 0;

  int size() const { return static_cast<int>(inputs.rows()); }
  int dim() const { return static_cast<int>(inputs.cols()); }

  // Throws ConfigError when labels, shape or values are inconsistent.
  void Validate() const;
  // Rows `indices` as a training batch.
  Batch Gather(std::span<const size_t> indices) const;
  // Rows `indices` as a standalone dataset.
  Dataset Subset(std::span<const size_t> indices) const;
  Batch AsBatch() const;
};

// One device's index view into the training dataset.
struct ClientShard {
  int client_id = 0;
  std::vector<size_t> indices;
  double weight = 0.0;  // p^k = n_k / n
};

// Benign-distribution samples carrying wrong labels. All attackers share it.
struct MaliciousDataset {
  Matrix inputs;
  std::vector<int> adversarial_labels;
  std::vector<int> true_labels;  // bookkeeping only
  int num_classes = 0;

  int size() const { return static_cast<int>(inputs.rows()); }
  // Inputs paired with their adversarial labels.
  Batch AsBatch() const;
  Batch Gather(std::span<const size_t> indices) const;
};

// Isotropic Gaussian blobs. Class means are drawn on the unit sphere.
Dataset GenSynthetic(int classes, int dim, int per_class, double spread,
                     RngStream& rng);

// Reads an IDX image file (magic 0x00000803) and label file (0x00000801).
// Pixels are divided by 255 and each image is flattened row-major.
Dataset LoadIdx(const std::filesystem::path& images_path,
                const std::filesystem::path& labels_path);

// Writes `ds` in IDX format. Inputs must be multiples of 1/255 in [0, 1] for
// the round trip through LoadIdx to be exact; other values are rounded.
// rows * cols must equal ds.dim().
void WriteIdx(const Dataset& ds, const std::filesystem::path& images_path,
              const std::filesystem::path& labels_path, int rows, int cols);

// Held-out carve-outs made before partitioning: `pool` feeds the malicious
// dataset and `test` measures benign accuracy. The three parts are disjoint.
struct DataSplit {
  Dataset train;
  Dataset pool;
  Dataset test;
};
DataSplit SplitHoldout(const Dataset& ds, double pool_fraction,
                       double test_fraction, RngStream& rng);

// Random permutation cut into near-equal shards (sizes differ by at most one).
std::vector<ClientShard> PartitionIid(const Dataset& ds, int num_clients,
                                      RngStream& rng);

// Label-sorted shards: sort by label, cut into num_clients * shards_per_client
// contiguous pieces (the last absorbs the remainder) and deal shards_per_client
// random pieces to each client.
std::vector<ClientShard> PartitionNonIidShards(const Dataset& ds,
                                               int num_clients,
                                               int shards_per_client,
                                               RngStream& rng);

// The contiguous label-sorted pieces PartitionNonIidShards deals out, in order.
std::vector<std::vector<size_t>> LabelSortedShards(const Dataset& ds,
                                                   int num_shards);

// Draws m rows of `pool` without replacement. Each adversarial label is drawn
// uniformly from the wrong classes, or fixed to `target_class` (rows already
// of that class are skipped).
MaliciousDataset BuildMaliciousDataset(
    const Dataset& pool, int m, RngStream& rng,
    std::optional<int> target_class = std::nullopt);

}  // namespace flsim

#endif  // FLSIM_DATA_PIPELINE_H_
