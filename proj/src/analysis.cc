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

#include "flsim/analysis.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "flsim/errors.h"

namespace flsim {
namespace {

// Round t of `run` with per-iteration trajectories. Uses the stored trace when
// the run captured one and otherwise replays the round, which reproduces it
// exactly because rounds are pure functions of their start model.
RoundTrace CapturedRound(const FederationConfig& cfg, const FederatedData& data,
                         const RunResult& run, int t, AttackMode mode) {
  if (static_cast<size_t>(t) < run.traces.size()) return run.traces[t];
  if (static_cast<size_t>(t) + 1 >= run.globals.size()) {
    throw PreconditionError("round " + std::to_string(t) +
                            " is not part of the run");
  }
  return ExecuteRound(cfg, data, run.globals[t], t, mode, true);
}

}  // namespace

AepRun RunExactAep(const FederationConfig& cfg, const ModelSpecPtr& model,
                   const FederatedData& data, int up_to_round,
                   bool capture_trajectories) {
  FederationConfig truncated = cfg;
  truncated.rounds = std::clamp(up_to_round, 0, cfg.rounds);
  RunOptions options;
  options.capture_trajectories = capture_trajectories;

  AepRun run;
  run.attacked = RunFederation(truncated, model, data, options);
  options.mode = AttackMode::kForcedBenign;
  run.shadow = RunFederation(truncated, model, data, options);

  for (int t = 0; t < truncated.rounds; ++t) {
    AepReport report;
    report.round = t;
    report.exact_delta = run.shadow.globals[t + 1] - run.attacked.globals[t + 1];
    report.delta_norm = report.exact_delta.Norm();
    run.attacked.state.logs[t].delta_norm = report.delta_norm;
    run.reports.push_back(std::move(report));
  }
  return run;
}

std::vector<AepReport> ExactAep(const FederationConfig& cfg,
                                const ModelSpecPtr& model,
                                const FederatedData& data, int up_to_round) {
  return RunExactAep(cfg, model, data, up_to_round).reports;
}

ParamVec OneRoundAep(const FederationConfig& cfg, const FederatedData& data,
                     const ParamVec& start, int round) {
  if (!IsAdversarialRound(cfg, round)) {
    throw MisuseError("round " + std::to_string(round) +
                      " is not adversarial; its one-round attack effect is "
                      "undefined");
  }
  const RoundTrace attacked =
      ExecuteRound(cfg, data, start, round, AttackMode::kConfigured, false);
  const RoundTrace benign =
      ExecuteRound(cfg, data, start, round, AttackMode::kForcedBenign, false);
  return benign.global - attacked.global;
}

ParamVec EstimateAep(const ParamVec& delta_prev,
                     std::span<const LocalUpdateResult> updates,
                     const Dataset& train, const HvpMethod& method) {
  const std::vector<double> weights = AggregationWeights(updates);
  ParamVec out = ParamVec::Zeros(delta_prev.spec_ptr());
  for (size_t k = 0; k < updates.size(); ++k) {
    const LocalUpdateResult& u = updates[k];
    if (!u.trajectory) {
      throw PreconditionError("client " + std::to_string(u.client_id) +
                              " has no captured trajectory");
    }
    const Trajectory& traj = *u.trajectory;
    ParamVec delta = delta_prev;
    for (int i = 0; i < traj.iterations(); ++i) {
      const Batch batch = train.Gather(traj.batches[i]);
      delta.Axpy(-traj.etas[i], Hvp(traj.snapshots[i], batch, delta, method));
    }
    out.Axpy(weights[k], delta);
  }
  return out;
}

std::vector<ParamVec> EstimateAepSeries(const FederationConfig& cfg,
                                        const FederatedData& data,
                                        const RunResult& attacked,
                                        const HvpMethod& method) {
  std::vector<ParamVec> series;
  const int rounds = static_cast<int>(attacked.state.logs.size());
  if (rounds == 0) return series;
  ParamVec delta = ParamVec::Zeros(attacked.globals.front().spec_ptr());
  for (int t = 0; t < rounds; ++t) {
    const RoundTrace trace =
        CapturedRound(cfg, data, attacked, t, AttackMode::kConfigured);
    if (!trace.is_adversarial) {
      delta = EstimateAep(delta, trace.updates, data.train, method);
    } else {
      const RoundTrace benign = ExecuteRound(
          cfg, data, trace.start, trace.round, AttackMode::kForcedBenign, true);
      delta = EstimateAep(delta, benign.updates, data.train, method) +
              (benign.global - trace.global);
    }
    series.push_back(delta);
  }
  return series;
}

double RelativeError(const ParamVec& estimate, const ParamVec& exact) {
  const double err = (estimate - exact).Norm();
  const double norm = exact.Norm();
  if (norm == 0.0) {
    return err == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return err / norm;
}

void AttachEstimates(std::span<AepReport> reports,
                     std::span<const ParamVec> estimates) {
  if (reports.size() != estimates.size()) {
    throw InternalError("estimate count differs from report count");
  }
  for (size_t t = 0; t < reports.size(); ++t) {
    reports[t].estimated_delta = estimates[t];
    reports[t].estimate_rel_error =
        RelativeError(estimates[t], reports[t].exact_delta);
  }
}

PhiReport PhiDiagnostic(int adversarial_round, const ParamVec& delta,
                        const RoundTrace& next_round,
                        const FederationConfig& cfg, const Dataset& train,
                        const HvpMethod& method) {
  PhiReport report;
  report.adversarial_round = adversarial_round;
  ParamVec sum = ParamVec::Zeros(delta.spec_ptr());
  int terms = 0;
  for (const LocalUpdateResult& u : next_round.updates) {
    if (cfg.IsAttacker(u.client_id)) continue;
    if (!u.trajectory) {
      throw PreconditionError("client " + std::to_string(u.client_id) +
                              " has no captured trajectory");
    }
    const Trajectory& traj = *u.trajectory;
    for (int i = 0; i < traj.iterations(); ++i) {
      sum += Hvp(traj.snapshots[i], train.Gather(traj.batches[i]), delta,
                 method);
      ++terms;
    }
  }
  if (terms == 0) return report;
  sum *= 1.0 / terms;
  report.mean_abs_phi = sum.values().cwiseAbs().mean();
  report.phi_vector_norm = sum.Norm();
  return report;
}

std::vector<PhiReport> PhiSeries(const FederationConfig& cfg,
                                 const FederatedData& data,
                                 const RunResult& attacked,
                                 const HvpMethod& method) {
  std::vector<PhiReport> reports;
  const int rounds = static_cast<int>(attacked.state.logs.size());
  for (int t = 0; t + 1 < rounds; ++t) {
    if (!attacked.state.logs[t].is_adversarial) continue;
    const ParamVec delta = OneRoundAep(cfg, data, attacked.globals[t], t);
    const RoundTrace next =
        CapturedRound(cfg, data, attacked, t + 1, AttackMode::kConfigured);
    reports.push_back(
        PhiDiagnostic(t, delta, next, cfg, data.train, method));
  }
  return reports;
}

double TheoryParams::LambdaAt(int round) const {
  if (round >= 0 && static_cast<size_t>(round) < lambda_by_round.size()) {
    return lambda_by_round[round];
  }
  return lambda;
}

double RobustnessBound(const TheoryParams& tp, int t_adv, int T) {
  if (T <= t_adv) throw ConfigError("robustness bound needs T > t_adv");
  if (tp.local_iterations < 1 || tp.devices_per_round < 1) {
    throw ConfigError("robustness bound needs I >= 1 and K >= 1");
  }
  if (!(tp.s >= 0.0)) throw ConfigError("robustness bound needs s >= 0");
  double sum = 0.0;
  for (int t = t_adv + 1; t <= T; ++t) {
    const double eta = tp.schedule.Eta(t, tp.local_iterations - 1,
                                       tp.local_iterations);
    sum += eta * eta * tp.LambdaAt(t);
  }
  const double scale = static_cast<double>(tp.num_params) *
                       tp.local_iterations * tp.s / tp.devices_per_round;
  return scale * sum;
}

ConvergenceSchedule ConvergenceScheduleFor(const TheoryParams& tp) {
  if (!(tp.mu > 0.0)) throw ConfigError("convergence bound needs mu > 0");
  if (!(tp.L >= tp.mu)) throw ConfigError("convergence bound needs L >= mu");
  if (tp.local_iterations < 1) {
    throw ConfigError("convergence bound needs I >= 1");
  }
  ConvergenceSchedule schedule;
  schedule.kappa = tp.L / tp.mu;
  schedule.gamma =
      std::max(8.0 * schedule.kappa, static_cast<double>(tp.local_iterations));
  schedule.eta00 = 2.0 / (tp.mu * schedule.gamma);
  return schedule;
}

double ConvergenceBound(const TheoryParams& tp, int T) {
  const ConvergenceSchedule schedule = ConvergenceScheduleFor(tp);
  if (tp.sigma_k.size() != tp.p_k.size()) {
    throw ConfigError("sigma_k and p_k must have the same length");
  }
  if (tp.devices_per_round < 1) {
    throw ConfigError("convergence bound needs K >= 1");
  }
  const double s2 = tp.s * tp.s;
  const double g2 = tp.G * tp.G;
  const double I = tp.local_iterations;
  double q = 6.0 * tp.L * tp.Gamma + 8.0 * (I - 1.0) * (I - 1.0) * (s2 + g2);
  for (size_t k = 0; k < tp.p_k.size(); ++k) {
    q += tp.p_k[k] * tp.p_k[k] * (s2 + tp.sigma_k[k] * tp.sigma_k[k]);
  }
  const double c = 4.0 / tp.devices_per_round * I * I * (s2 + g2);
  return 2.0 * schedule.kappa / (schedule.gamma + T * I) *
         ((q + c) / tp.mu +
          0.5 * tp.mu * schedule.gamma * tp.init_distance_sq);
}

TheoryParams TheoryParamsFor(const FederationConfig& cfg,
                             const ModelSpecPtr& model,
                             const FederatedData& data) {
  TheoryParams tp;
  tp.num_params = model->num_params();
  std::vector<size_t> sizes;
  for (const ClientShard& shard : data.shards) {
    sizes.push_back(shard.indices.size());
  }
  if (!sizes.empty()) {
    std::nth_element(sizes.begin(), sizes.begin() + sizes.size() / 2,
                     sizes.end());
    tp.local_iterations = cfg.LocalIterations(sizes[sizes.size() / 2]);
  }
  tp.devices_per_round = cfg.devices_per_round;
  if (const auto* flwbc = std::get_if<FlwbcDefense>(&cfg.defense)) {
    tp.s = flwbc->s;
  }
  tp.schedule = cfg.learning_rate;
  return tp;
}

RobustnessCheck EmpiricalRobustness(const FederationConfig& cfg,
                                    const FederatedData& data,
                                    const AepRun& run, int t_adv, int T) {
  const int rounds = static_cast<int>(run.reports.size());
  if (t_adv < 0 || T <= t_adv || T >= rounds) {
    throw ConfigError("robustness check needs 0 <= t_adv < T < rounds");
  }
  RobustnessCheck check;
  check.t_adv = t_adv;
  check.T = T;
  check.measured =
      (run.reports[T].exact_delta - run.reports[t_adv].exact_delta)
          .SquaredNorm();

  TheoryParams tp =
      TheoryParamsFor(cfg, run.attacked.globals.front().spec_ptr(), data);
  tp.lambda_by_round.assign(T + 1, 0.0);
  for (int t = t_adv + 1; t <= T; ++t) {
    const RoundTrace attacked =
        CapturedRound(cfg, data, run.attacked, t, AttackMode::kConfigured);
    const RoundTrace shadow =
        CapturedRound(cfg, data, run.shadow, t, AttackMode::kForcedBenign);
    double lambda = std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < attacked.updates.size(); ++k) {
      if (cfg.IsAttacker(attacked.updates[k].client_id)) continue;
      const Trajectory& a = *attacked.updates[k].trajectory;
      const Trajectory& b = *shadow.updates[k].trajectory;
      for (int i = 0; i < a.iterations(); ++i) {
        lambda = std::min(lambda, (b.snapshots[i] - a.snapshots[i]).SquaredNorm());
      }
    }
    if (!std::isfinite(lambda)) lambda = 0.0;
    tp.lambda_by_round[t] = lambda;
    check.lambda.push_back(lambda);
  }
  check.bound = RobustnessBound(tp, t_adv, T);
  return check;
}

}  // namespace flsim
