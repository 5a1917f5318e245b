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

// Attack-effect measurement, Hessian-kernel diagnostics and the closed-form
// robustness and convergence bounds.

#ifndef FLSIM_ANALYSIS_H_
#define FLSIM_ANALYSIS_H_

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "flsim/data_pipeline.h"
#include "flsim/federation_config.h"
#include "flsim/fl_engine.h"
#include "flsim/nn_core.h"

namespace flsim {

// Attack effect after one round: delta = W(never attacked) - W(attacked).
struct AepReport {
  int round = 0;
  ParamVec exact_delta;
  std::optional<ParamVec> estimated_delta;
  double delta_norm = 0.0;
  std::optional<double> estimate_rel_error;
};

struct AepRun {
  RunResult attacked;
  RunResult shadow;  // same schedule, samples and streams; attackers benign
  std::vector<AepReport> reports;  // one per round
};

// Runs the attacked federation and its never-attacked shadow for
// min(up_to_round, cfg.rounds) rounds.
AepRun RunExactAep(const FederationConfig& cfg, const ModelSpecPtr& model,
                   const FederatedData& data, int up_to_round,
                   bool capture_trajectories = false);

std::vector<AepReport> ExactAep(const FederationConfig& cfg,
                                const ModelSpecPtr& model,
                                const FederatedData& data, int up_to_round);

// Replays adversarial `round` from `start` twice, with the configured attack
// and with attackers forced benign, and returns the difference of the two
// aggregates. Throws MisuseError on a benign round.
ParamVec OneRoundAep(const FederationConfig& cfg, const FederatedData& data,
                     const ParamVec& start, int round);

// Carries delta_prev through one round of captured local trajectories with
// the linearized recursion delta <- delta - eta * H(W_i, xi_i) delta, then
// combines the clients with the aggregation weights. Throws PreconditionError
// when a trajectory is missing.
ParamVec EstimateAep(const ParamVec& delta_prev,
                     std::span<const LocalUpdateResult> updates,
                     const Dataset& train, const HvpMethod& method = {});

// Estimated attack effect after every round of a run. Rounds the run did not
// capture are replayed with trajectories, one at a time. Benign rounds
// propagate the previous estimate. Adversarial rounds propagate it through the
// benign devices and the attackers' benign counterfactual trajectories, then
// add that round's OneRoundAep.
std::vector<ParamVec> EstimateAepSeries(const FederationConfig& cfg,
                                        const FederatedData& data,
                                        const RunResult& attacked,
                                        const HvpMethod& method = {});

// ||estimate - exact|| / ||exact||; zero when both vanish.
double RelativeError(const ParamVec& estimate, const ParamVec& exact);

// Stores `estimates` and their errors in `reports` (matched by index).
void AttachEstimates(std::span<AepReport> reports,
                     std::span<const ParamVec> estimates);

struct PhiReport {
  int adversarial_round = 0;
  double mean_abs_phi = 0.0;
  double phi_vector_norm = 0.0;
};

// Mean of H(W_i, xi_i) delta over the benign devices and local iterations of
// `next_round`.
PhiReport PhiDiagnostic(int adversarial_round, const ParamVec& delta,
                        const RoundTrace& next_round,
                        const FederationConfig& cfg, const Dataset& train,
                        const HvpMethod& method = {});

// One report per adversarial round that has a following round, using the
// round's OneRoundAep. Uncaptured rounds are replayed.
std::vector<PhiReport> PhiSeries(const FederationConfig& cfg,
                                 const FederatedData& data,
                                 const RunResult& attacked,
                                 const HvpMethod& method = {});

struct TheoryParams {
  size_t num_params = 0;  // P
  int local_iterations = 1;  // I
  int devices_per_round = 1;  // K
  double s = 0.0;
  // Lower bound on the expected squared attack effect per round. Entry t of
  // lambda_by_round overrides `lambda` when present.
  double lambda = 1.0;
  std::vector<double> lambda_by_round;
  LearningRate schedule = LearningRate::Constant(0.01);
  // Smoothness, strong convexity, gradient bound, heterogeneity gap.
  double L = 1.0;
  double mu = 1.0;
  double G = 0.0;
  double Gamma = 0.0;
  double init_distance_sq = 0.0;  // ||W_0 - W*||^2
  std::vector<double> sigma_k;
  std::vector<double> p_k;

  double LambdaAt(int round) const;
};

// (P * I * s / K) * sum_{t = t_adv + 1}^{T} eta_{t, I-1}^2 * Lambda_t.
double RobustnessBound(const TheoryParams& tp, int t_adv, int T);

struct ConvergenceSchedule {
  double kappa = 0.0;
  double gamma = 0.0;
  double eta00 = 0.0;  // first step size 2 / (mu * gamma)
};

// kappa = L / mu, gamma = max(8 kappa, I). Requires L >= mu > 0.
ConvergenceSchedule ConvergenceScheduleFor(const TheoryParams& tp);

// (2 kappa / (gamma + T I)) * ((Q + C) / mu + (mu gamma / 2) ||W_0 - W*||^2)
// with Q = sum_k p_k^2 (s^2 + sigma_k^2) + 6 L Gamma + 8 (I-1)^2 (s^2 + G^2)
// and C = (4 / K) I^2 (s^2 + G^2).
double ConvergenceBound(const TheoryParams& tp, int T);

// Measured drift of the attack effect after an adversarial round against the
// robustness bound with Lambda_t taken from the run itself.
struct RobustnessCheck {
  int t_adv = 0;
  int T = 0;
  double measured = 0.0;  // ||delta_T - delta_{t_adv}||^2
  double bound = 0.0;
  std::vector<double> lambda;  // rounds t_adv + 1 .. T
};

// Uncaptured rounds are replayed. Lambda_t is the smallest
// squared per-iteration distance between matching benign trajectories of the
// shadow and attacked runs in round t.
RobustnessCheck EmpiricalRobustness(const FederationConfig& cfg,
                                    const FederatedData& data,
                                    const AepRun& run, int t_adv, int T);

// P, I, K, s and the step-size schedule of a simulated federation. I is taken
// from the median shard size.
TheoryParams TheoryParamsFor(const FederationConfig& cfg,
                             const ModelSpecPtr& model,
                             const FederatedData& data);

}  // namespace flsim

#endif  // FLSIM_ANALYSIS_H_
