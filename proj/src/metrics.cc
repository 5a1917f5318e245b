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

#include "flsim/metrics.h"

#include <algorithm>

#include "flsim/errors.h"

namespace flsim {

Prediction ScoreOutputs(const ParamVec& params, const Matrix& inputs) {
  if (params.spec().is_classifier()) return Predict(params, inputs);
  Prediction out;
  out.probabilities = Softmax(Forward(params, inputs));
  out.labels.resize(out.probabilities.rows());
  for (Eigen::Index r = 0; r < out.probabilities.rows(); ++r) {
    Eigen::Index best = 0;
    out.probabilities.row(r).maxCoeff(&best);
    out.labels[r] = static_cast<int>(best);
  }
  return out;
}

AttackMetricsResult AttackMetrics(const ParamVec& params,
                                  const MaliciousDataset& dm) {
  AttackMetricsResult result;
  if (dm.size() == 0) return result;
  const Prediction pred = ScoreOutputs(params, dm.inputs);
  for (int r = 0; r < dm.size(); ++r) {
    const int target = dm.adversarial_labels[r];
    result.confidence += pred.probabilities(r, target);
    if (pred.labels[r] == target) result.accuracy += 1.0;
  }
  result.confidence /= dm.size();
  result.accuracy /= dm.size();
  return result;
}

double BenignAccuracy(const ParamVec& params, const Dataset& test) {
  if (test.size() == 0) return 0.0;
  const Prediction pred = ScoreOutputs(params, test.inputs);
  int correct = 0;
  for (int r = 0; r < test.size(); ++r) {
    if (pred.labels[r] == test.labels[r]) ++correct;
  }
  return static_cast<double>(correct) / test.size();
}

MitigationResult MitigationRounds(std::span<const RoundRecord> records,
                                  int adv_round,
                                  std::optional<double> benign_error_rate,
                                  int horizon) {
  auto find = [&](int round) -> const RoundRecord* {
    auto it = std::find_if(records.begin(), records.end(),
                           [round](const RoundRecord& r) { return r.round == round; });
    return it == records.end() ? nullptr : &*it;
  };
  if (find(adv_round) == nullptr) {
    throw PreconditionError("round " + std::to_string(adv_round) +
                            " is not in the log");
  }
  for (int r = 1; r <= horizon; ++r) {
    const RoundRecord* rec = find(adv_round + r);
    if (rec == nullptr) break;
    const bool undone =
        benign_error_rate
            ? rec->misclassification_accuracy < *benign_error_rate
            : rec->misclassification_confidence < 0.5;
    if (undone) return MitigationResult{r, true};
  }
  return MitigationResult{horizon, false};
}

std::vector<AdversarialOutcome> MitigationPerAdversarialRound(
    std::span<const RoundRecord> records, bool multi_image, int horizon) {
  std::vector<AdversarialOutcome> out;
  for (size_t i = 0; i < records.size(); ++i) {
    if (!records[i].is_adversarial) continue;
    std::optional<double> error_rate;
    if (multi_image) {
      error_rate = 1.0 - (i > 0 ? records[i - 1] : records[i]).benign_accuracy;
    }
    AdversarialOutcome outcome;
    outcome.adv_round = records[i].round;
    outcome.mitigation =
        MitigationRounds(records, records[i].round, error_rate, horizon);
    outcome.full_horizon =
        records.back().round >= records[i].round + horizon;
    out.push_back(outcome);
  }
  return out;
}

}  // namespace flsim
