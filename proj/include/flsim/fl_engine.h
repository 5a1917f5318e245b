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

// FedAvg orchestration: adversarial-round schedule, device sampling, benign
// local training, aggregation and replay.

#ifndef FLSIM_FL_ENGINE_H_
#define FLSIM_FL_ENGINE_H_

#include <optional>
#include <span>
#include <vector>

#include "flsim/data_pipeline.h"
#include "flsim/federation_config.h"
#include "flsim/local_update.h"
#include "flsim/metrics.h"
#include "flsim/nn_core.h"

namespace flsim {

// Everything a federation reads. shards[k] belongs to device k.
struct FederatedData {
  Dataset train;
  std::vector<ClientShard> shards;
  MaliciousDataset malicious;
  Dataset test;
};

// Round 0 is always benign. Later rounds are adversarial with probability
// adversarial_prob, drawn from the round's schedule stream.
bool IsAdversarialRound(const FederationConfig& cfg, int round);

// Sorted ids of the devices taking part in `round`. Benign rounds pick
// devices_per_round benign devices; adversarial rounds pick
// adversaries_per_round attackers and fill the rest with benign devices.
// Attackers are never sampled in benign rounds.
std::vector<int> SampleDevices(const FederationConfig& cfg, int round,
                               bool adversarial, RngStream& rng);

// E epochs of mini-batch SGD on the shard. FL-WBC post-processes every step;
// LDP clips and noises the final update.
LocalUpdateResult LocalTrainBenign(const ParamVec& start,
                                   const ClientShard& shard,
                                   const Dataset& train,
                                   const FederationConfig& cfg, int round,
                                   ClientStreams& streams, bool capture);

// Sampled-set weights p^k / sum_j p^j.
std::vector<double> AggregationWeights(
    std::span<const LocalUpdateResult> results);

// Weighted model average, or the robust/DP rule selected by cfg.defense.
// `server_noise` is only read by CDP.
ParamVec Aggregate(std::span<const LocalUpdateResult> results,
                   const ParamVec& prev_global, const FederationConfig& cfg,
                   RngStream& server_noise);

enum class AttackMode {
  kConfigured,
  // Attackers train on the benign objective (alpha = 1, no booster). Every
  // stream and the sampled set are unchanged.
  kForcedBenign,
};

// One round from `start`. Pure function of its arguments.
struct RoundTrace {
  int round = 0;
  bool is_adversarial = false;
  std::vector<int> sampled;
  ParamVec start;
  ParamVec global;
  std::vector<LocalUpdateResult> updates;  // in `sampled` order
};

RoundTrace ExecuteRound(const FederationConfig& cfg, const FederatedData& data,
                        const ParamVec& start, int round, AttackMode mode,
                        bool capture);

RoundRecord MeasureRound(const FederationConfig& cfg, const FederatedData& data,
                         const RoundTrace& trace);

// Batch rows drawn by one device in one round.
struct DrawRecord {
  int round = 0;
  int client_id = 0;
  std::vector<std::vector<size_t>> batches;

  friend bool operator==(const DrawRecord&, const DrawRecord&) = default;
};

struct RunOptions {
  AttackMode mode = AttackMode::kConfigured;
  bool capture_trajectories = false;
  bool record_draws = false;
  // Start from these parameters instead of the seeded initialization.
  std::optional<ParamVec> initial_params;
};

struct FederationState {
  ParamVec global_params;
  int round = 0;  // rounds completed
  std::vector<RoundRecord> logs;
};

struct RunResult {
  FederationState state;
  std::vector<ParamVec> globals;  // W before round 0, then after every round
  std::vector<RoundTrace> traces;  // filled when capturing trajectories
  std::vector<DrawRecord> draws;
};

// Seeded starting model of a run.
ParamVec InitialParams(const FederationConfig& cfg, const ModelSpecPtr& model);

RunResult RunFederation(const FederationConfig& cfg, const ModelSpecPtr& model,
                        const FederatedData& data,
                        const RunOptions& options = {});

}  // namespace flsim

#endif  // FLSIM_FL_ENGINE_H_
