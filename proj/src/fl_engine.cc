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

#include "flsim/fl_engine.h"

#include <algorithm>
#include <string>
#include <utility>

#include "flsim/attack.h"
#include "flsim/defense.h"
#include "flsim/errors.h"

namespace flsim {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// First `count` entries of a seeded partial Fisher-Yates shuffle.
std::vector<int> Choose(std::vector<int> pool, int count, RngStream& rng) {
  for (int i = 0; i < count; ++i) {
    const size_t j = i + rng.UniformIndex(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  return pool;
}

// Re-throws `fn`'s errors with the round and client prepended.
template <class Fn>
auto WithContext(int round, int client_id, Fn&& fn) {
  const std::string where = "round " + std::to_string(round) + ", client " +
                            std::to_string(client_id) + ": ";
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(where + e.what());
  } catch (const PreconditionError& e) {
    throw PreconditionError(where + e.what());
  } catch (const InternalError& e) {
    throw InternalError(where + e.what());
  } catch (const Error& e) {
    throw Error(where + e.what());
  }
}

}  // namespace

bool IsAdversarialRound(const FederationConfig& cfg, int round) {
  if (round == 0 || cfg.attacker_ids.empty() || cfg.adversarial_prob <= 0.0) {
    return false;
  }
  RngStream rng = DeriveRng(cfg.master_seed, round, -1, RngPurpose::kSchedule);
  return rng.Uniform01() < cfg.adversarial_prob;
}

std::vector<int> SampleDevices(const FederationConfig& cfg, int round,
                               bool adversarial, RngStream& rng) {
  (void)round;
  std::vector<int> benign;
  for (int id = 0; id < cfg.num_devices; ++id) {
    if (!cfg.IsAttacker(id)) benign.push_back(id);
  }
  const int attackers = adversarial ? cfg.adversaries_per_round : 0;
  if (attackers > static_cast<int>(cfg.attacker_ids.size())) {
    throw ConfigError("adversaries_per_round exceeds the attacker count");
  }
  const int benign_needed = cfg.devices_per_round - attackers;
  if (benign_needed < 0 || benign_needed > static_cast<int>(benign.size())) {
    throw ConfigError("not enough benign devices to fill devices_per_round");
  }
  std::vector<int> sampled = Choose(cfg.attacker_ids, attackers, rng);
  const std::vector<int> picked = Choose(std::move(benign), benign_needed, rng);
  sampled.insert(sampled.end(), picked.begin(), picked.end());
  std::sort(sampled.begin(), sampled.end());
  return sampled;
}

LocalUpdateResult LocalTrainBenign(const ParamVec& start,
                                   const ClientShard& shard,
                                   const Dataset& train,
                                   const FederationConfig& cfg, int round,
                                   ClientStreams& streams, bool capture) {
  LocalUpdateResult result;
  result.client_id = shard.client_id;
  result.weight = shard.weight;
  result.batch_draws = DrawBatches(shard, cfg, streams.batching);
  const int iterations = static_cast<int>(result.batch_draws.size());
  const auto* flwbc = std::get_if<FlwbcDefense>(&cfg.defense);

  if (capture) {
    result.trajectory.emplace();
    result.trajectory->snapshots.push_back(start);
    result.trajectory->batches = result.batch_draws;
  }

  FlwbcState state;
  ParamVec w = start;
  for (int i = 0; i < iterations; ++i) {
    const Batch batch = train.Gather(result.batch_draws[i]);
    const double eta = cfg.learning_rate.Eta(round, i, iterations);
    ParamVec next = SgdStep(w, LossAndGrad(w, batch).grad, eta);
    if (flwbc != nullptr) {
      next = FlwbcStep(state, w, next, eta, flwbc->s, streams.noise).params;
    }
    w = std::move(next);
    if (capture) {
      result.trajectory->snapshots.push_back(w);
      result.trajectory->etas.push_back(eta);
    }
  }
  if (const auto* ldp = std::get_if<LdpDefense>(&cfg.defense)) {
    w = start + LdpApply(w - start, ldp->clip, ldp->sigma, streams.noise);
  }
  result.final_params = std::move(w);
  return result;
}

std::vector<double> AggregationWeights(
    std::span<const LocalUpdateResult> results) {
  double total = 0.0;
  for (const LocalUpdateResult& r : results) total += r.weight;
  if (!(total > 0.0)) throw InternalError("sampled weights sum to zero");
  std::vector<double> weights;
  weights.reserve(results.size());
  for (const LocalUpdateResult& r : results) weights.push_back(r.weight / total);
  return weights;
}

ParamVec Aggregate(std::span<const LocalUpdateResult> results,
                   const ParamVec& prev_global, const FederationConfig& cfg,
                   RngStream& server_noise) {
  if (results.empty()) throw PreconditionError("nothing to aggregate");
  std::vector<ParamVec> models;
  models.reserve(results.size());
  for (const LocalUpdateResult& r : results) {
    if (!r.final_params.SameLayout(prev_global)) {
      throw InternalError("client " + std::to_string(r.client_id) +
                          " returned a mismatched parameter layout");
    }
    models.push_back(r.final_params);
  }
  const std::vector<double> weights = AggregationWeights(results);
  auto weighted_mean = [&] {
    ParamVec out = ParamVec::Zeros(prev_global.spec_ptr());
    for (size_t k = 0; k < models.size(); ++k) out.Axpy(weights[k], models[k]);
    return out;
  };
  return std::visit(
      Overloaded{
          [&](const CmaDefense&) { return CmaAggregate(models); },
          [&](const CtmaDefense& d) { return CtmaAggregate(models, d.beta); },
          [&](const CdpDefense& d) {
            return CdpApply(models, weights, prev_global, d.clip, d.sigma,
                            server_noise);
          },
          [&](const auto&) { return weighted_mean(); },
      },
      cfg.defense);
}

RoundTrace ExecuteRound(const FederationConfig& cfg, const FederatedData& data,
                        const ParamVec& start, int round, AttackMode mode,
                        bool capture) {
  RoundTrace trace;
  trace.round = round;
  trace.is_adversarial = IsAdversarialRound(cfg, round);
  RngStream sampling =
      DeriveRng(cfg.master_seed, round, -1, RngPurpose::kSampling);
  trace.sampled = SampleDevices(cfg, round, trace.is_adversarial, sampling);
  trace.start = start;

  AttackPolicy counterfactual;
  counterfactual.alpha = 1.0;
  counterfactual.malicious_batch_size = cfg.attack.malicious_batch_size;
  const AttackPolicy& policy =
      mode == AttackMode::kConfigured ? cfg.attack : counterfactual;

  for (int id : trace.sampled) {
    if (id < 0 || id >= static_cast<int>(data.shards.size())) {
      throw ConfigError("no shard for device " + std::to_string(id));
    }
    const ClientShard& shard = data.shards[id];
    ClientStreams streams = ClientStreams::For(cfg.master_seed, round, id);
    trace.updates.push_back(WithContext(round, id, [&] {
      if (cfg.IsAttacker(id)) {
        return LocalTrainMalicious(start, shard, data.train, data.malicious,
                                   policy, cfg, round, streams, capture);
      }
      return LocalTrainBenign(start, shard, data.train, cfg, round, streams,
                              capture);
    }));
  }
  RngStream server_noise =
      DeriveRng(cfg.master_seed, round, -1, RngPurpose::kNoise);
  trace.global = WithContext(round, -1, [&] {
    return Aggregate(trace.updates, start, cfg, server_noise);
  });
  if (!trace.global.AllFinite()) {
    throw Error("round " + std::to_string(round) +
                ": global model diverged to non-finite values");
  }
  return trace;
}

RoundRecord MeasureRound(const FederationConfig& cfg, const FederatedData& data,
                         const RoundTrace& trace) {
  RoundRecord record;
  record.round = trace.round;
  record.is_adversarial = trace.is_adversarial;
  record.benign_accuracy = BenignAccuracy(trace.global, data.test);
  const AttackMetricsResult attack = AttackMetrics(trace.global, data.malicious);
  record.misclassification_confidence = attack.confidence;
  record.misclassification_accuracy = attack.accuracy;
  record.defense_tag = DefenseTag(cfg.defense);
  return record;
}

ParamVec InitialParams(const FederationConfig& cfg, const ModelSpecPtr& model) {
  RngStream rng = DeriveRng(cfg.master_seed, -1, -1, RngPurpose::kInit);
  return InitParams(model, rng);
}

RunResult RunFederation(const FederationConfig& cfg, const ModelSpecPtr& model,
                        const FederatedData& data, const RunOptions& options) {
  cfg.Validate();
  if (static_cast<int>(data.shards.size()) != cfg.num_devices) {
    throw ConfigError("num_devices is " + std::to_string(cfg.num_devices) +
                      " but the partition has " +
                      std::to_string(data.shards.size()) + " shards");
  }
  RunResult result;
  result.state.global_params =
      options.initial_params ? *options.initial_params
                             : InitialParams(cfg, model);
  result.globals.push_back(result.state.global_params);
  for (int t = 0; t < cfg.rounds; ++t) {
    RoundTrace trace =
        ExecuteRound(cfg, data, result.state.global_params, t, options.mode,
                     options.capture_trajectories);
    result.state.logs.push_back(MeasureRound(cfg, data, trace));
    if (options.record_draws) {
      for (const LocalUpdateResult& u : trace.updates) {
        result.draws.push_back(DrawRecord{t, u.client_id, u.batch_draws});
      }
    }
    result.state.global_params = trace.global;
    result.state.round = t + 1;
    result.globals.push_back(trace.global);
    if (options.capture_trajectories) result.traces.push_back(std::move(trace));
  }
  return result;
}

}  // namespace flsim
