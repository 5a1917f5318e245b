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

// Local training on malicious devices.

#ifndef FLSIM_ATTACK_H_
#define FLSIM_ATTACK_H_

#include "flsim/data_pipeline.h"
#include "flsim/federation_config.h"
#include "flsim/local_update.h"
#include "flsim/nn_core.h"

namespace flsim {

// Rows of D_M used at local iteration i: the whole set when it holds at most
// `malicious_batch_size` rows, otherwise a window of that size that cycles
// through D_M.
std::vector<size_t> MaliciousBatchRows(int dm_size, int malicious_batch_size,
                                       int iteration);

// Gradient of the kernel-seeking regularizer. The Hessian is frozen at the
// round-start model, which makes the regularizer linear in W with the constant
// gradient H * 1.
ParamVec RhGradient(const ParamVec& start, const Batch& shard_batch);

// Blended poisoning objective: every iteration steps along
//   alpha * grad F_k(W, xi) + (1 - alpha) * grad F_M(W, pi) [+ lambda * H 1]
// using the same mini-batch schedule a benign device would draw. Attackers do
// not run client-side defenses. With alpha == 1 and no booster the result is
// bit-identical to undefended benign training.
LocalUpdateResult LocalTrainMalicious(const ParamVec& start,
                                      const ClientShard& shard,
                                      const Dataset& train,
                                      const MaliciousDataset& dm,
                                      const AttackPolicy& policy,
                                      const FederationConfig& cfg, int round,
                                      ClientStreams& streams, bool capture);

}  // namespace flsim

#endif  // FLSIM_ATTACK_H_
