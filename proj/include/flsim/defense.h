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

// Client-side perturbation, robust aggregation and differential-privacy
// baselines.

#ifndef FLSIM_DEFENSE_H_
#define FLSIM_DEFENSE_H_

#include <cstddef>
#include <span>

#include "flsim/nn_core.h"
#include "flsim/rng.h"

namespace flsim {

// Parameter history of one local training session. After a step, w_minus_1 is
// the most recent pre-step model and w_minus_2 the one before it. Both include
// earlier perturbations.
struct FlwbcState {
  ParamVec w_minus_1;
  ParamVec w_minus_2;
  bool first_batch_done = false;
};

struct FlwbcStepResult {
  ParamVec params;  // model after the perturbation step
  ParamVec noise;   // the Laplace matrix drawn for this batch
  size_t masked = 0;
};

// Perturbation step run after every local SGD step of a benign client.
//
// A fresh Laplace matrix U (std s) is drawn for each batch. From the second
// batch on, the second difference of the parameter trajectory
//   W* = (w_after - w_before) - (w_before - w_minus_1)
// serves as a proxy for the Hessian diagonal, and every coordinate with
// |W*_j| <= eta * |U_j| is moved by eta * U_j. The first batch only records
// history.
FlwbcStepResult FlwbcStep(FlwbcState& state, const ParamVec& w_before,
                          const ParamVec& w_after_sgd, double eta, double s,
                          RngStream& rng);

// Per-coordinate median (mean of the two middle values for even counts).
ParamVec CmaAggregate(std::span<const ParamVec> models);

// Per coordinate: sort, drop floor(beta * K) values from each end and average
// the rest. Throws ConfigError when nothing would remain.
ParamVec CtmaAggregate(std::span<const ParamVec> models, double beta);

// Server-side DP: every update W^k - prev_global is clipped to `clip`, the
// clipped updates are averaged with the normalized weights, and Laplace noise
// with std sigma / K is added to the average.
ParamVec CdpApply(std::span<const ParamVec> models,
                  std::span<const double> weights, const ParamVec& prev_global,
                  double clip, double sigma, RngStream& rng);

// Client-side DP on an update: clip to `clip`, then add elementwise Laplace
// noise with std sigma.
ParamVec LdpApply(const ParamVec& update, double clip, double sigma,
                  RngStream& rng);

}  // namespace flsim

#endif  // FLSIM_DEFENSE_H_
