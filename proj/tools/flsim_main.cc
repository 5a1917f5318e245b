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

// flsim: command-line front end of the federated-learning simulator.
//
//   flsim run --config desk.json --out runs/desk
//   flsim analyze --config desk.json --aep --phi --estimate
//   flsim bound --P 100 --I 4 --K 10 --s 0.01 --eta 0.01 --T 1
//   flsim sweep --config desk.json --param s --values 0.1,0.4,1.0
//   flsim gen-data --config desk.json --out data/

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "flsim/commands.h"
#include "flsim/errors.h"
#include "flsim/experiment.h"

namespace {

constexpr int kOk = 0;
constexpr int kConfigFailure = 1;
constexpr int kRuntimeFailure = 2;

struct CommonFlags {
  std::string config;
  std::optional<std::string> out;
  std::optional<uint64_t> seed;
};

void AddCommon(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config, "experiment JSON")->required();
  cmd->add_option("--out", flags.out, "output directory");
  cmd->add_option("--seed", flags.seed, "master seed override");
}

flsim::ExperimentConfig Load(const CommonFlags& flags) {
  flsim::ExperimentConfig cfg = flsim::LoadExperiment(flags.config);
  if (flags.seed) flsim::OverrideSeed(cfg, *flags.seed);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic federated-learning poisoning simulator"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  CLI::App* run = app.add_subcommand("run", "run one federation");
  AddCommon(run, run_flags);

  CommonFlags analyze_flags;
  flsim::AnalyzeRequest analyze_request;
  CLI::App* analyze =
      app.add_subcommand("analyze", "attack-effect and kernel diagnostics");
  AddCommon(analyze, analyze_flags);
  analyze->add_flag("--aep", analyze_request.aep, "exact attack effect");
  analyze->add_flag("--phi", analyze_request.phi, "kernel diagnostic");
  analyze->add_flag("--estimate", analyze_request.estimate,
                    "linearized estimate and its error");

  flsim::BoundRequest bound_request;
  flsim::TheoryParams& tp = bound_request.params;
  double eta = 0.01;
  std::optional<double> decay_mu;
  bool want_convergence = false;
  bool want_robustness = false;
  CLI::App* bound = app.add_subcommand("bound", "evaluate the closed-form bounds");
  bound->add_option("--P", tp.num_params, "parameter count");
  bound->add_option("--I", tp.local_iterations, "local iterations");
  bound->add_option("--K", tp.devices_per_round, "devices per round");
  bound->add_option("--s", tp.s, "perturbation std");
  bound->add_option("--lambda", tp.lambda, "attack-effect lower bound");
  bound->add_option("--eta", eta, "constant step size");
  bound->add_option("--decay-mu", decay_mu,
                    "use the decaying schedule with this mu (and --L)");
  bound->add_option("--t-adv", bound_request.t_adv, "adversarial round");
  bound->add_option("--T", bound_request.T, "final round");
  bound->add_option("--L", tp.L, "smoothness");
  bound->add_option("--mu", tp.mu, "strong convexity");
  bound->add_option("--G", tp.G, "gradient norm bound");
  bound->add_option("--Gamma", tp.Gamma, "heterogeneity gap");
  bound->add_option("--init-dist-sq", tp.init_distance_sq, "||W_0 - W*||^2");
  bound->add_option("--sigma-k", tp.sigma_k, "per-device gradient variance")
      ->delimiter(',');
  bound->add_option("--p-k", tp.p_k, "per-device weights")->delimiter(',');
  bound->add_flag("--robustness", want_robustness, "robustness bound");
  bound->add_flag("--convergence", want_convergence, "convergence bound");

  CommonFlags sweep_flags;
  std::string sweep_param;
  std::vector<double> sweep_values;
  CLI::App* sweep = app.add_subcommand("sweep", "sweep one defense parameter");
  AddCommon(sweep, sweep_flags);
  sweep->add_option("--param", sweep_param, "s, beta, clip or sigma")
      ->required();
  sweep->add_option("--values", sweep_values, "comma-separated values")
      ->delimiter(',')
      ->required();

  CommonFlags gen_flags;
  CLI::App* gen = app.add_subcommand("gen-data", "write synthetic data as IDX");
  AddCommon(gen, gen_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigFailure;
  }

  try {
    if (*run) {
      const flsim::ExperimentConfig cfg = Load(run_flags);
      const auto dir = flsim::ResolveOutputDir(run_flags.out, cfg);
      const flsim::RunOutcome outcome = flsim::CmdRun(cfg, dir);
      std::cout << "wrote " << (dir / "rounds.csv").string() << " ("
                << outcome.records.size() << " rounds)\n";
    } else if (*analyze) {
      if (!analyze_request.aep && !analyze_request.phi &&
          !analyze_request.estimate) {
        analyze_request.aep = true;
      }
      const flsim::ExperimentConfig cfg = Load(analyze_flags);
      const auto dir = flsim::ResolveOutputDir(analyze_flags.out, cfg);
      flsim::CmdAnalyze(cfg, analyze_request, dir);
      std::cout << "wrote analysis to " << dir.string() << "\n";
    } else if (*bound) {
      if (tp.num_params < 1 || tp.local_iterations < 1 ||
          tp.devices_per_round < 1 || !(eta > 0.0)) {
        throw flsim::ConfigError("bound needs positive P, I, K and eta");
      }
      tp.schedule = decay_mu ? flsim::LearningRate::Decaying(*decay_mu, tp.L)
                             : flsim::LearningRate::Constant(eta);
      bound_request.robustness = want_robustness || !want_convergence;
      bound_request.convergence = want_convergence;
      std::cout << flsim::CmdBound(bound_request).dump(2) << "\n";
    } else if (*sweep) {
      const flsim::ExperimentConfig cfg = Load(sweep_flags);
      const auto dir = flsim::ResolveOutputDir(sweep_flags.out, cfg);
      flsim::CmdSweep(cfg, sweep_param, sweep_values, dir);
      std::cout << "wrote " << (dir / "tradeoff.csv").string() << "\n";
    } else if (*gen) {
      const flsim::ExperimentConfig cfg = Load(gen_flags);
      const auto dir = flsim::ResolveOutputDir(gen_flags.out, cfg);
      flsim::CmdGenData(cfg, dir);
      std::cout << "wrote IDX files to " << dir.string() << "\n";
    }
  } catch (const flsim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigFailure;
  } catch (const flsim::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kConfigFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  return kOk;
}
