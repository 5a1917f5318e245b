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

// Per-round measurements of the global model.

#ifndef FLSIM_METRICS_H_
#define FLSIM_METRICS_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flsim/data_pipeline.h"
#include "flsim/nn_core.h"

namespace flsim {

struct RoundRecord {
  int round = 0;
  bool is_adversarial = false;
  double benign_accuracy = 0.0;
  double misclassification_confidence = 0.0;
  double misclassification_accuracy = 0.0;
  std::string defense_tag;
  std::optional<double> delta_norm;

  friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

struct AttackMetricsResult {
  double confidence = 0.0;  // mean probability of the adversarial label
  double accuracy = 0.0;    // fraction predicted as the adversarial label
};

// Class probabilities of the model outputs. Squared-error models are scored
// through a softmax of their raw outputs so they can share the metrics.
Prediction ScoreOutputs(const ParamVec& params, const Matrix& inputs);

AttackMetricsResult AttackMetrics(const ParamVec& params,
                                  const MaliciousDataset& dm);

// Fraction of `test` classified correctly.
double BenignAccuracy(const ParamVec& params, const Dataset& test);

struct MitigationResult {
  int rounds = 0;  // the horizon when not mitigated
  bool mitigated = false;
};

// Rounds after `adv_round` until the attack is undone: the first r >= 1 for
// which the record of round adv_round + r has confidence below 0.5 or, when
// `benign_error_rate` is set, misclassification accuracy below that rate.
// Records past the horizon or past the end of the log are never consulted.
MitigationResult MitigationRounds(std::span<const RoundRecord> records,
                                  int adv_round,
                                  std::optional<double> benign_error_rate,
                                  int horizon);

struct AdversarialOutcome {
  int adv_round = 0;
  MitigationResult mitigation;
  // Whether the log extends `horizon` rounds past the attack.
  bool full_horizon = false;
};

// MitigationRounds for every adversarial round of the log. Multi-image runs
// compare against the benign error rate of the round before the attack.
std::vector<AdversarialOutcome> MitigationPerAdversarialRound(
    std::span<const RoundRecord> records, bool multi_image, int horizon);

}  // namespace flsim

#endif  // FLSIM_METRICS_H_
