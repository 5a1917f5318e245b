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

// Subcommand bodies shared by the command-line tool and the tests. They throw
// flsim errors; the tool maps them to exit codes.

#ifndef FLSIM_COMMANDS_H_
#define FLSIM_COMMANDS_H_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "flsim/analysis.h"
#include "flsim/experiment.h"
#include "flsim/metrics.h"

namespace flsim {

// Environment variable that overrides the configured output directory.
inline constexpr char kOutDirEnv[] = "FLSIM_OUT_DIR";

// --out beats the environment, which beats output.dir; "." otherwise.
std::filesystem::path ResolveOutputDir(const std::optional<std::string>& flag,
                                       const ExperimentConfig& cfg);

// Applies --seed: replaces the master seed. The data seed follows it unless
// the config pins data.seed.
void OverrideSeed(ExperimentConfig& cfg, uint64_t seed);

inline constexpr char kRoundsHeader[] =
    "round,is_adversarial,benign_acc,mis_conf,mis_acc,delta_norm,defense";
inline constexpr char kAepHeader[] = "round,delta_norm,estimate_rel_error";
inline constexpr char kPhiHeader[] = "adv_round,mean_abs_phi";
inline constexpr char kTradeoffHeader[] =
    "param_value,benign_acc,avg_mitigation_rounds";

// Shortest round-trip decimal form used in every CSV cell.
std::string FormatNumber(double value);

std::string RoundsCsv(const std::vector<RoundRecord>& records);

struct RunOutcome {
  std::vector<RoundRecord> records;
  std::vector<AdversarialOutcome> adversarial;
  nlohmann::ordered_json summary;
};

// Runs the federation (and its shadow when there are attackers, for the
// delta_norm column). Writes rounds.csv and summary.json into out_dir.
RunOutcome CmdRun(const ExperimentConfig& cfg,
                  const std::filesystem::path& out_dir);

struct AnalyzeRequest {
  bool aep = false;
  bool phi = false;
  bool estimate = false;
};

// Writes aep.csv when aep or estimate is requested and phi.csv for phi.
// Throws ConfigError with a remediation hint when phi/estimate are requested
// without trajectory capture.
void CmdAnalyze(const ExperimentConfig& cfg, const AnalyzeRequest& request,
                const std::filesystem::path& out_dir);

struct BoundRequest {
  TheoryParams params;
  int t_adv = 0;
  int T = 1;
  bool robustness = true;
  bool convergence = false;
};

// Input echo plus the requested bounds.
nlohmann::ordered_json CmdBound(const BoundRequest& request);

// Average mitigation rounds over the adversarial rounds of a log; rounds that
// are never mitigated count as horizon + 1. NaN when there were none.
double AverageMitigationRounds(const std::vector<AdversarialOutcome>& outcomes,
                               int horizon);

// Copy of `policy` with one parameter replaced. The parameter must belong to
// the policy ("s" for flwbc, "beta" for ctma, "clip"/"sigma" for cdp/ldp).
DefensePolicy WithDefenseParam(const DefensePolicy& policy,
                               const std::string& param, double value);

// One run per value under the same seed; writes tradeoff.csv.
void CmdSweep(const ExperimentConfig& cfg, const std::string& param,
              const std::vector<double>& values,
              const std::filesystem::path& out_dir);

// Writes the configured synthetic dataset as an IDX pair, min-max quantized to
// 8 bits, as data-images-idx3-ubyte and data-labels-idx1-ubyte.
void CmdGenData(const ExperimentConfig& cfg,
                const std::filesystem::path& out_dir);

}  // namespace flsim

#endif  // FLSIM_COMMANDS_H_
