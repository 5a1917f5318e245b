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

#include "flsim/commands.h"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "flsim/errors.h"
#include "flsim/fl_engine.h"

namespace flsim {
namespace {

using Json = nlohmann::ordered_json;

void WriteFile(const std::filesystem::path& path, const std::string& body) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << body;
  if (!out) throw Error("short write to " + path.string());
}

bool SetDpParam(double& clip, double& sigma, const std::string& param,
                double value) {
  if (param == "clip") {
    clip = value;
    return true;
  }
  if (param == "sigma") {
    sigma = value;
    return true;
  }
  return false;
}

bool MultiImage(const ExperimentConfig& cfg) {
  return cfg.data.malicious_size > 1;
}

}  // namespace

std::filesystem::path ResolveOutputDir(const std::optional<std::string>& flag,
                                       const ExperimentConfig& cfg) {
  if (flag && !flag->empty()) return *flag;
  if (const char* env = std::getenv(kOutDirEnv); env != nullptr && *env) {
    return env;
  }
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  return ".";
}

void OverrideSeed(ExperimentConfig& cfg, uint64_t seed) {
  cfg.federation.master_seed = seed;
}

std::string FormatNumber(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw InternalError("number formatting failed");
  return std::string(buf, end);
}

std::string RoundsCsv(const std::vector<RoundRecord>& records) {
  std::string out = std::string(kRoundsHeader) + "\n";
  for (const RoundRecord& r : records) {
    out += std::to_string(r.round) + "," + (r.is_adversarial ? "1" : "0") +
           "," + FormatNumber(r.benign_accuracy) + "," +
           FormatNumber(r.misclassification_confidence) + "," +
           FormatNumber(r.misclassification_accuracy) + "," +
           (r.delta_norm ? FormatNumber(*r.delta_norm) : "") + "," +
           r.defense_tag + "\n";
  }
  return out;
}

RunOutcome CmdRun(const ExperimentConfig& cfg,
                  const std::filesystem::path& out_dir) {
  const ExperimentSetup setup = BuildExperiment(cfg);
  const FederationConfig& fed = cfg.federation;

  RunOutcome outcome;
  if (fed.attacker_ids.empty()) {
    outcome.records = RunFederation(fed, setup.model, setup.data).state.logs;
    for (RoundRecord& r : outcome.records) r.delta_norm = 0.0;
  } else {
    outcome.records =
        RunExactAep(fed, setup.model, setup.data, fed.rounds).attacked.state.logs;
  }
  outcome.adversarial = MitigationPerAdversarialRound(
      outcome.records, MultiImage(cfg), cfg.horizon);

  Json summary;
  summary["seed"] = fed.master_seed;
  summary["rounds"] = outcome.records.size();
  summary["final_benign_acc"] =
      outcome.records.empty() ? 0.0 : outcome.records.back().benign_accuracy;
  Json mitigation = Json::array();
  for (const AdversarialOutcome& a : outcome.adversarial) {
    Json entry;
    entry["adv_round"] = a.adv_round;
    entry["rounds"] = a.mitigation.rounds;
    entry["mitigated"] = a.mitigation.mitigated;
    entry["full_horizon"] = a.full_horizon;
    mitigation.push_back(entry);
  }
  summary["mitigation_rounds"] = mitigation;
  summary["config"] = ExperimentToJson(cfg);
  outcome.summary = summary;

  WriteFile(out_dir / "rounds.csv", RoundsCsv(outcome.records));
  WriteFile(out_dir / "summary.json", summary.dump(2) + "\n");
  return outcome;
}

void CmdAnalyze(const ExperimentConfig& cfg, const AnalyzeRequest& request,
                const std::filesystem::path& out_dir) {
  if ((request.phi || request.estimate) && !cfg.capture_trajectories) {
    throw ConfigError(
        "--phi and --estimate need per-iteration trajectories; set "
        "\"capture_trajectories\": true in the config and rerun");
  }
  const ExperimentSetup setup = BuildExperiment(cfg);
  const FederationConfig& fed = cfg.federation;
  // Trajectories are replayed one round at a time instead of being stored
  // for the whole run, which keeps memory flat.
  AepRun run = RunExactAep(fed, setup.model, setup.data, fed.rounds);

  if (request.aep || request.estimate) {
    if (request.estimate) {
      const std::vector<ParamVec> estimates =
          EstimateAepSeries(fed, setup.data, run.attacked);
      AttachEstimates(run.reports, estimates);
    }
    std::string csv = std::string(kAepHeader) + "\n";
    for (const AepReport& r : run.reports) {
      csv += std::to_string(r.round) + "," + FormatNumber(r.delta_norm) + "," +
             (r.estimate_rel_error ? FormatNumber(*r.estimate_rel_error) : "") +
             "\n";
    }
    WriteFile(out_dir / "aep.csv", csv);
  }
  if (request.phi) {
    std::string csv = std::string(kPhiHeader) + "\n";
    for (const PhiReport& r : PhiSeries(fed, setup.data, run.attacked)) {
      csv += std::to_string(r.adversarial_round) + "," +
             FormatNumber(r.mean_abs_phi) + "\n";
    }
    WriteFile(out_dir / "phi.csv", csv);
  }
}

Json CmdBound(const BoundRequest& request) {
  const TheoryParams& tp = request.params;
  Json input;
  input["P"] = tp.num_params;
  input["I"] = tp.local_iterations;
  input["K"] = tp.devices_per_round;
  input["s"] = tp.s;
  input["lambda"] = tp.lambda;
  if (tp.schedule.kind == LearningRate::Kind::kConstant) {
    input["eta"] = tp.schedule.eta;
  } else {
    input["schedule"] = "decaying";
  }
  input["t_adv"] = request.t_adv;
  input["T"] = request.T;
  input["L"] = tp.L;
  input["mu"] = tp.mu;
  input["G"] = tp.G;
  input["Gamma"] = tp.Gamma;
  input["init_distance_sq"] = tp.init_distance_sq;
  input["sigma_k"] = tp.sigma_k;
  input["p_k"] = tp.p_k;

  Json out;
  out["input"] = input;
  if (request.robustness) {
    out["robustness_bound"] = RobustnessBound(tp, request.t_adv, request.T);
  }
  if (request.convergence) {
    const ConvergenceSchedule schedule = ConvergenceScheduleFor(tp);
    out["kappa"] = schedule.kappa;
    out["gamma"] = schedule.gamma;
    out["eta00"] = schedule.eta00;
    out["convergence_bound"] = ConvergenceBound(tp, request.T);
  }
  return out;
}

double AverageMitigationRounds(const std::vector<AdversarialOutcome>& outcomes,
                               int horizon) {
  if (outcomes.empty()) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  for (const AdversarialOutcome& a : outcomes) {
    sum += a.mitigation.mitigated ? a.mitigation.rounds : horizon + 1;
  }
  return sum / static_cast<double>(outcomes.size());
}

DefensePolicy WithDefenseParam(const DefensePolicy& policy,
                               const std::string& param, double value) {
  DefensePolicy out = policy;
  bool matched = false;
  if (auto* f = std::get_if<FlwbcDefense>(&out); f && param == "s") {
    f->s = value;
    matched = true;
  } else if (auto* c = std::get_if<CtmaDefense>(&out); c && param == "beta") {
    c->beta = value;
    matched = true;
  } else if (auto* p = std::get_if<CdpDefense>(&out)) {
    matched = SetDpParam(p->clip, p->sigma, param, value);
  } else if (auto* l = std::get_if<LdpDefense>(&out)) {
    matched = SetDpParam(l->clip, l->sigma, param, value);
  }
  if (!matched) {
    throw ConfigError("sweep parameter " + param +
                      " does not belong to defense " + DefenseTag(policy));
  }
  ValidateDefense(out);
  return out;
}

void CmdSweep(const ExperimentConfig& cfg, const std::string& param,
              const std::vector<double>& values,
              const std::filesystem::path& out_dir) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  // Fail on a bad parameter before any compute.
  for (double v : values) WithDefenseParam(cfg.federation.defense, param, v);

  const ExperimentSetup setup = BuildExperiment(cfg);
  std::string csv = std::string(kTradeoffHeader) + "\n";
  for (double v : values) {
    FederationConfig fed = cfg.federation;
    fed.defense = WithDefenseParam(fed.defense, param, v);
    const std::vector<RoundRecord> records =
        RunFederation(fed, setup.model, setup.data).state.logs;
    const double acc = records.empty() ? 0.0 : records.back().benign_accuracy;
    const double avg = AverageMitigationRounds(
        MitigationPerAdversarialRound(records, MultiImage(cfg), cfg.horizon),
        cfg.horizon);
    csv += FormatNumber(v) + "," + FormatNumber(acc) + "," + FormatNumber(avg) +
           "\n";
  }
  WriteFile(out_dir / "tradeoff.csv", csv);
}

void CmdGenData(const ExperimentConfig& cfg,
                const std::filesystem::path& out_dir) {
  if (!std::holds_alternative<SyntheticSource>(cfg.data.source)) {
    throw ConfigError("gen-data needs data.source.kind = synthetic");
  }
  Dataset ds = GenerateData(cfg);
  const double lo = ds.inputs.minCoeff();
  const double hi = ds.inputs.maxCoeff();
  const double range = hi > lo ? hi - lo : 1.0;
  ds.inputs = ((ds.inputs.array() - lo) / range * 255.0).round() / 255.0;
  std::filesystem::create_directories(out_dir);
  WriteIdx(ds, out_dir / "data-images-idx3-ubyte",
           out_dir / "data-labels-idx1-ubyte", 1, ds.dim());
}

}  // namespace flsim
