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

#include "flsim/local_update.h"

#include <algorithm>
#include <numeric>

#include "flsim/errors.h"

namespace flsim {

RngStream DeriveRng(uint64_t master_seed, int round, int client_id,
                    RngPurpose purpose) {
  // Chained SplitMix64 over the key fields. Signed ids are widened so that -1
  // maps to a value no non-negative id can reach.
  uint64_t h = SplitMix64(master_seed);
  h = SplitMix64(h ^ static_cast<uint64_t>(static_cast<int64_t>(round)));
  h = SplitMix64(h ^ static_cast<uint64_t>(static_cast<int64_t>(client_id)));
  h = SplitMix64(h ^ static_cast<uint64_t>(purpose));
  return RngStream(h);
}

ClientStreams ClientStreams::For(uint64_t master_seed, int round,
                                 int client_id) {
  return ClientStreams{
      DeriveRng(master_seed, round, client_id, RngPurpose::kBatching),
      DeriveRng(master_seed, round, client_id, RngPurpose::kNoise)};
}

std::vector<std::vector<size_t>> DrawBatches(const ClientShard& shard,
                                             const FederationConfig& cfg,
                                             RngStream& batching) {
  if (shard.indices.empty()) {
    throw PreconditionError("client " + std::to_string(shard.client_id) +
                            " has an empty shard");
  }
  std::vector<size_t> order;
  order.reserve(shard.indices.size() * cfg.local_epochs);
  std::vector<size_t> perm(shard.indices.size());
  for (int e = 0; e < cfg.local_epochs; ++e) {
    std::iota(perm.begin(), perm.end(), size_t{0});
    batching.Shuffle(perm);
    for (size_t p : perm) order.push_back(shard.indices[p]);
  }
  const size_t b = static_cast<size_t>(cfg.batch_size);
  std::vector<std::vector<size_t>> batches;
  batches.reserve((order.size() + b - 1) / b);
  for (size_t begin = 0; begin < order.size(); begin += b) {
    const size_t end = std::min(order.size(), begin + b);
    batches.emplace_back(order.begin() + begin, order.begin() + end);
  }
  return batches;
}

}  // namespace flsim
