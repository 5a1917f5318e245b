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

#include "flsim/attack.h"

#include "flsim/errors.h"

namespace flsim {

std::vector<size_t> MaliciousBatchRows(int dm_size, int malicious_batch_size,
                                       int iteration) {
  std::vector<size_t> rows;
  if (dm_size <= malicious_batch_size) {
    for (int r = 0; r < dm_size; ++r) rows.push_back(static_cast<size_t>(r));
    return rows;
  }
  const size_t start = static_cast<size_t>(iteration) *
                       static_cast<size_t>(malicious_batch_size) %
                       static_cast<size_t>(dm_size);
  for (int j = 0; j < malicious_batch_size; ++j) {
    rows.push_back((start + static_cast<size_t>(j)) % dm_size);
  }
  return rows;
}

ParamVec RhGradient(const ParamVec& start, const Batch& shard_batch) {
  return Hvp(start, shard_batch, ParamVec::Constant(start.spec_ptr(), 1.0));
}

LocalUpdateResult LocalTrainMalicious(const ParamVec& start,
                                      const ClientShard& shard,
                                      const Dataset& train,
                                      const MaliciousDataset& dm,
                                      const AttackPolicy& policy,
                                      const FederationConfig& cfg, int round,
                                      ClientStreams& streams, bool capture) {
  if (dm.size() == 0) {
    throw PreconditionError("malicious dataset is empty");
  }
  LocalUpdateResult result;
  result.client_id = shard.client_id;
  result.weight = shard.weight;
  result.batch_draws = DrawBatches(shard, cfg, streams.batching);
  const int iterations = static_cast<int>(result.batch_draws.size());
  const bool blend = policy.alpha != 1.0;
  const bool boost = policy.rh_lambda && *policy.rh_lambda > 0.0;

  if (capture) {
    result.trajectory.emplace();
    result.trajectory->snapshots.push_back(start);
    result.trajectory->batches = result.batch_draws;
  }

  ParamVec boost_grad;
  ParamVec w = start;
  for (int i = 0; i < iterations; ++i) {
    const Batch batch = train.Gather(result.batch_draws[i]);
    if (boost && i == 0) {
      boost_grad = RhGradient(start, batch);
      boost_grad *= *policy.rh_lambda;
    }
    ParamVec g = LossAndGrad(w, batch).grad;
    if (blend) {
      const std::vector<size_t> rows =
          MaliciousBatchRows(dm.size(), policy.malicious_batch_size, i);
      const ParamVec g_mal = LossAndGrad(w, dm.Gather(rows)).grad;
      g *= policy.alpha;
      g.Axpy(1.0 - policy.alpha, g_mal);
    }
    if (boost) g += boost_grad;
    const double eta = cfg.learning_rate.Eta(round, i, iterations);
    w = SgdStep(w, g, eta);
    if (capture) {
      result.trajectory->snapshots.push_back(w);
      result.trajectory->etas.push_back(eta);
    }
  }
  result.final_params = std::move(w);
  return result;
}

}  // namespace flsim
