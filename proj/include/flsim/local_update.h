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

#ifndef FLSIM_LOCAL_UPDATE_H_
#define FLSIM_LOCAL_UPDATE_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "flsim/data_pipeline.h"
#include "flsim/federation_config.h"
#include "flsim/nn_core.h"
#include "flsim/rng.h"

namespace flsim {

// Independent stream families. Distinct purposes never share a stream.
enum class RngPurpose : uint64_t {
  kBatching = 1,
  kNoise = 2,
  kSampling = 3,
  kSchedule = 4,
  kInit = 5,
  // Dataset construction; the round field selects the stage.
  kData = 6,
};

// Deterministic stream keyed by (seed, round, client, purpose). Server-side
// draws use client_id = -1; run-level draws use round = -1.
RngStream DeriveRng(uint64_t master_seed, int round, int client_id,
                    RngPurpose purpose);

// The private streams one client consumes during one round.
struct ClientStreams {
  RngStream batching;
  RngStream noise;

  static ClientStreams For(uint64_t master_seed, int round, int client_id);
};

// Per-iteration record of a local training session: W_{t,0}..W_{t,I}, the
// shard rows of each mini-batch and the step size used.
struct Trajectory {
  std::vector<ParamVec> snapshots;
  std::vector<std::vector<size_t>> batches;
  std::vector<double> etas;

  int iterations() const { return static_cast<int>(batches.size()); }
};

struct LocalUpdateResult {
  int client_id = 0;
  ParamVec final_params;  // W_{t,I}^k as uploaded
  double weight = 0.0;    // p^k
  std::optional<Trajectory> trajectory;
  // Dataset rows of every mini-batch, kept for draw-log comparison.
  std::vector<std::vector<size_t>> batch_draws;
};

// Mini-batch schedule for one local session: local_epochs shuffled passes over
// the shard, concatenated and cut into batches of batch_size. The final batch
// may be short. Returns dataset row indices.
std::vector<std::vector<size_t>> DrawBatches(const ClientShard& shard,
                                             const FederationConfig& cfg,
                                             RngStream& batching);

}  // namespace flsim

#endif  // FLSIM_LOCAL_UPDATE_H_
