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

#include "flsim/data_pipeline.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>
#include <string>

#include "flsim/errors.h"

namespace flsim {
namespace {

constexpr uint32_t kImageMagic = 0x00000803;
constexpr uint32_t kLabelMagic = 0x00000801;

std::vector<unsigned char> ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("file", "cannot open " + path.string());
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

uint32_t ReadBigEndian32(const std::vector<unsigned char>& bytes, size_t at,
                         const char* field, const std::filesystem::path& path) {
  if (bytes.size() < at + 4) {
    throw ParseError(field, "truncated file " + path.string() +
                                ": missing header field '" + field + "'");
  }
  return (uint32_t{bytes[at]} << 24) | (uint32_t{bytes[at + 1]} << 16) |
         (uint32_t{bytes[at + 2]} << 8) | uint32_t{bytes[at + 3]};
}

std::string Hex(uint32_t value) {
  std::ostringstream out;
  out << "0x" << std::hex;
  out.width(8);
  out.fill('0');
  out << value;
  return out.str();
}

void WriteBigEndian32(std::ofstream& out, uint32_t value) {
  const std::array<char, 4> bytes = {
      static_cast<char>(value >> 24), static_cast<char>(value >> 16),
      static_cast<char>(value >> 8), static_cast<char>(value)};
  out.write(bytes.data(), bytes.size());
}

std::vector<ClientShard> ShardsFromIndexLists(
    std::vector<std::vector<size_t>> lists, size_t total) {
  std::vector<ClientShard> shards;
  shards.reserve(lists.size());
  for (size_t k = 0; k < lists.size(); ++k) {
    ClientShard shard;
    shard.client_id = static_cast<int>(k);
    shard.weight = static_cast<double>(lists[k].size()) / total;
    shard.indices = std::move(lists[k]);
    shards.push_back(std::move(shard));
  }
  return shards;
}

}  // namespace

void Dataset::Validate() const {
  if (size() < 1) throw ConfigError("dataset is empty");
  if (num_classes < 1) throw ConfigError("dataset num_classes must be >= 1");
  if (static_cast<int>(labels.size()) != size()) {
    throw ConfigError("dataset label count does not match its row count");
  }
  for (int label : labels) {
    if (label < 0 || label >= num_classes) {
      throw ConfigError("dataset label outside [0, num_classes)");
    }
  }
  if (!inputs.allFinite()) throw ConfigError("dataset inputs contain NaN/Inf");
}

Batch Dataset::Gather(std::span<const size_t> indices) const {
  Batch batch;
  batch.inputs.resize(static_cast<Eigen::Index>(indices.size()), dim());
  batch.labels.reserve(indices.size());
  for (size_t i = 0; i < indices.size(); ++i) {
    batch.inputs.row(static_cast<Eigen::Index>(i)) =
        inputs.row(static_cast<Eigen::Index>(indices[i]));
    batch.labels.push_back(labels[indices[i]]);
  }
  return batch;
}

Dataset Dataset::Subset(std::span<const size_t> indices) const {
  Batch rows = Gather(indices);
  return Dataset{std::move(rows.inputs), std::move(rows.labels), num_classes};
}

Batch Dataset::AsBatch() const { return Batch{inputs, labels, {}}; }

Batch MaliciousDataset::AsBatch() const {
  return Batch{inputs, adversarial_labels, {}};
}

Batch MaliciousDataset::Gather(std::span<const size_t> indices) const {
  Batch batch;
  batch.inputs.resize(static_cast<Eigen::Index>(indices.size()),
                      inputs.cols());
  for (size_t i = 0; i < indices.size(); ++i) {
    batch.inputs.row(static_cast<Eigen::Index>(i)) =
        inputs.row(static_cast<Eigen::Index>(indices[i]));
    batch.labels.push_back(adversarial_labels[indices[i]]);
  }
  return batch;
}

Dataset GenSynthetic(int classes, int dim, int per_class, double spread,
                     RngStream& rng) {
  if (classes < 2) throw ConfigError("synthetic classes must be >= 2");
  if (dim < 1) throw ConfigError("synthetic dim must be >= 1");
  if (per_class < 1) throw ConfigError("synthetic per_class must be >= 1");
  if (!(spread >= 0.0)) throw ConfigError("synthetic spread must be >= 0");

  Matrix means(classes, dim);
  for (int c = 0; c < classes; ++c) {
    for (int d = 0; d < dim; ++d) means(c, d) = rng.Normal();
    means.row(c).normalize();
  }
  Dataset ds;
  ds.num_classes = classes;
  ds.inputs.resize(static_cast<Eigen::Index>(classes) * per_class, dim);
  ds.labels.reserve(static_cast<size_t>(classes) * per_class);
  Eigen::Index row = 0;
  for (int c = 0; c < classes; ++c) {
    for (int i = 0; i < per_class; ++i, ++row) {
      for (int d = 0; d < dim; ++d) {
        ds.inputs(row, d) = means(c, d) + spread * rng.Normal();
      }
      ds.labels.push_back(c);
    }
  }
  return ds;
}

Dataset LoadIdx(const std::filesystem::path& images_path,
                const std::filesystem::path& labels_path) {
  const std::vector<unsigned char> images = ReadFile(images_path);
  const std::vector<unsigned char> labels = ReadFile(labels_path);

  const uint32_t image_magic = ReadBigEndian32(images, 0, "magic", images_path);
  if (image_magic != kImageMagic) {
    throw ParseError("magic", "unexpected magic " + Hex(image_magic) +
                                  " in image file (expected " +
                                  Hex(kImageMagic) + ")");
  }
  const uint32_t label_magic = ReadBigEndian32(labels, 0, "magic", labels_path);
  if (label_magic != kLabelMagic) {
    throw ParseError("magic", "unexpected magic " + Hex(label_magic) +
                                  " in label file (expected " +
                                  Hex(kLabelMagic) + ")");
  }
  const uint32_t image_count =
      ReadBigEndian32(images, 4, "count", images_path);
  const uint32_t rows = ReadBigEndian32(images, 8, "rows", images_path);
  const uint32_t cols = ReadBigEndian32(images, 12, "cols", images_path);
  const uint32_t label_count =
      ReadBigEndian32(labels, 4, "count", labels_path);
  if (image_count != label_count) {
    throw ParseError("count", "count mismatch: " + std::to_string(image_count) +
                                  " images but " +
                                  std::to_string(label_count) + " labels");
  }
  if (image_count == 0) throw ParseError("count", "IDX files hold no samples");
  const size_t dim = static_cast<size_t>(rows) * cols;
  if (dim == 0) throw ParseError("rows", "IDX images have zero pixels");
  if (images.size() < 16 + image_count * dim) {
    throw ParseError("pixels", "truncated image file " + images_path.string() +
                                   ": expected " +
                                   std::to_string(image_count * dim) +
                                   " pixel bytes");
  }
  if (labels.size() < 8 + static_cast<size_t>(label_count)) {
    throw ParseError("labels", "truncated label file " + labels_path.string() +
                                   ": expected " + std::to_string(label_count) +
                                   " label bytes");
  }

  Dataset ds;
  ds.inputs.resize(image_count, static_cast<Eigen::Index>(dim));
  ds.labels.resize(image_count);
  int max_label = 0;
  for (uint32_t i = 0; i < image_count; ++i) {
    for (size_t p = 0; p < dim; ++p) {
      ds.inputs(i, static_cast<Eigen::Index>(p)) =
          images[16 + i * dim + p] / 255.0;
    }
    ds.labels[i] = labels[8 + i];
    max_label = std::max(max_label, ds.labels[i]);
  }
  ds.num_classes = std::max(2, max_label + 1);
  return ds;
}

void WriteIdx(const Dataset& ds, const std::filesystem::path& images_path,
              const std::filesystem::path& labels_path, int rows, int cols) {
  if (rows < 1 || cols < 1 || rows * cols != ds.dim()) {
    throw ConfigError("IDX rows * cols must equal the dataset dimension");
  }
  for (int label : ds.labels) {
    if (label < 0 || label > 255) {
      throw ConfigError("IDX labels must fit in one byte");
    }
  }
  std::ofstream images(images_path, std::ios::binary);
  std::ofstream labels(labels_path, std::ios::binary);
  if (!images || !labels) throw ConfigError("cannot open IDX output files");
  WriteBigEndian32(images, kImageMagic);
  WriteBigEndian32(images, static_cast<uint32_t>(ds.size()));
  WriteBigEndian32(images, static_cast<uint32_t>(rows));
  WriteBigEndian32(images, static_cast<uint32_t>(cols));
  for (int i = 0; i < ds.size(); ++i) {
    for (int d = 0; d < ds.dim(); ++d) {
      const double scaled = std::clamp(ds.inputs(i, d), 0.0, 1.0) * 255.0;
      images.put(static_cast<char>(static_cast<int>(std::lround(scaled))));
    }
  }
  WriteBigEndian32(labels, kLabelMagic);
  WriteBigEndian32(labels, static_cast<uint32_t>(ds.size()));
  for (int label : ds.labels) labels.put(static_cast<char>(label));
}

DataSplit SplitHoldout(const Dataset& ds, double pool_fraction,
                       double test_fraction, RngStream& rng) {
  if (pool_fraction < 0.0 || test_fraction < 0.0 ||
      pool_fraction + test_fraction >= 1.0) {
    throw ConfigError(
        "holdout fractions must be non-negative and sum to less than 1");
  }
  std::vector<size_t> order(ds.size());
  std::iota(order.begin(), order.end(), size_t{0});
  rng.Shuffle(order);
  const auto n = static_cast<size_t>(ds.size());
  const auto n_pool = std::max<size_t>(
      pool_fraction > 0.0 ? 1 : 0,
      static_cast<size_t>(std::floor(pool_fraction * n)));
  const auto n_test = std::max<size_t>(
      test_fraction > 0.0 ? 1 : 0,
      static_cast<size_t>(std::floor(test_fraction * n)));
  if (n_pool + n_test >= n) {
    throw ConfigError("holdout fractions leave no training data");
  }
  std::span<const size_t> all(order);
  DataSplit split;
  split.pool = ds.Subset(all.subspan(0, n_pool));
  split.test = ds.Subset(all.subspan(n_pool, n_test));
  // Training rows keep their original relative order.
  std::vector<size_t> train(order.begin() + static_cast<long>(n_pool + n_test),
                            order.end());
  std::sort(train.begin(), train.end());
  split.train = ds.Subset(train);
  return split;
}

std::vector<ClientShard> PartitionIid(const Dataset& ds, int num_clients,
                                      RngStream& rng) {
  const auto n = static_cast<size_t>(ds.size());
  if (num_clients < 1 || static_cast<size_t>(num_clients) > n) {
    throw ConfigError("num_clients must be in [1, dataset size]");
  }
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  rng.Shuffle(order);
  std::vector<std::vector<size_t>> lists(num_clients);
  const size_t base = n / num_clients;
  const size_t extra = n % num_clients;
  size_t at = 0;
  for (size_t k = 0; k < lists.size(); ++k) {
    const size_t len = base + (k < extra ? 1 : 0);
    lists[k].assign(order.begin() + static_cast<long>(at),
                    order.begin() + static_cast<long>(at + len));
    at += len;
  }
  return ShardsFromIndexLists(std::move(lists), n);
}

std::vector<std::vector<size_t>> LabelSortedShards(const Dataset& ds,
                                                   int num_shards) {
  const auto n = static_cast<size_t>(ds.size());
  if (num_shards < 1 || static_cast<size_t>(num_shards) > n) {
    throw ConfigError("shard count must be in [1, dataset size]");
  }
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return ds.labels[a] < ds.labels[b];
  });
  std::vector<std::vector<size_t>> shards(num_shards);
  const size_t len = n / num_shards;
  for (int s = 0; s < num_shards; ++s) {
    const size_t begin = s * len;
    const size_t end = (s + 1 == num_shards) ? n : begin + len;
    shards[s].assign(order.begin() + static_cast<long>(begin),
                     order.begin() + static_cast<long>(end));
  }
  return shards;
}

std::vector<ClientShard> PartitionNonIidShards(const Dataset& ds,
                                               int num_clients,
                                               int shards_per_client,
                                               RngStream& rng) {
  if (num_clients < 1 || shards_per_client < 1) {
    throw ConfigError("num_clients and shards_per_client must be >= 1");
  }
  const long total = static_cast<long>(num_clients) * shards_per_client;
  if (total > ds.size()) {
    throw ConfigError("num_clients * shards_per_client exceeds dataset size");
  }
  std::vector<std::vector<size_t>> pieces =
      LabelSortedShards(ds, static_cast<int>(total));
  std::vector<size_t> deal(pieces.size());
  std::iota(deal.begin(), deal.end(), size_t{0});
  rng.Shuffle(deal);
  std::vector<std::vector<size_t>> lists(num_clients);
  for (int k = 0; k < num_clients; ++k) {
    for (int j = 0; j < shards_per_client; ++j) {
      const auto& piece = pieces[deal[k * shards_per_client + j]];
      lists[k].insert(lists[k].end(), piece.begin(), piece.end());
    }
  }
  return ShardsFromIndexLists(std::move(lists),
                              static_cast<size_t>(ds.size()));
}

MaliciousDataset BuildMaliciousDataset(const Dataset& pool, int m,
                                       RngStream& rng,
                                       std::optional<int> target_class) {
  if (m < 1) throw ConfigError("malicious dataset size must be >= 1");
  if (pool.num_classes < 2) {
    throw ConfigError("malicious labels need at least two classes");
  }
  if (target_class &&
      (*target_class < 0 || *target_class >= pool.num_classes)) {
    throw ConfigError("malicious target_class outside [0, num_classes)");
  }
  std::vector<size_t> candidates;
  for (int i = 0; i < pool.size(); ++i) {
    if (!target_class || pool.labels[i] != *target_class) {
      candidates.push_back(static_cast<size_t>(i));
    }
  }
  if (static_cast<size_t>(m) > candidates.size()) {
    throw ConfigError("malicious dataset size " + std::to_string(m) +
                      " exceeds the held-out pool (" +
                      std::to_string(candidates.size()) + " eligible rows)");
  }
  // Partial Fisher-Yates: the first m slots are a uniform sample.
  for (int i = 0; i < m; ++i) {
    const size_t j = i + rng.UniformIndex(candidates.size() - i);
    std::swap(candidates[i], candidates[j]);
  }
  MaliciousDataset dm;
  dm.num_classes = pool.num_classes;
  dm.inputs.resize(m, pool.dim());
  for (int i = 0; i < m; ++i) {
    const size_t row = candidates[i];
    dm.inputs.row(i) = pool.inputs.row(static_cast<Eigen::Index>(row));
    const int truth = pool.labels[row];
    dm.true_labels.push_back(truth);
    if (target_class) {
      dm.adversarial_labels.push_back(*target_class);
    } else {
      const int r = static_cast<int>(rng.UniformIndex(pool.num_classes - 1));
      dm.adversarial_labels.push_back(r < truth ? r : r + 1);
    }
  }
  return dm;
}

}  // namespace flsim
