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

#include "flsim/federation_config.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "flsim/errors.h"

namespace flsim {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string Num(double value) {
  std::ostringstream out;
  out << value;
  return out.str();
}

}  // namespace

std::string DefenseTag(const DefensePolicy& policy) {
  return std::visit(
      Overloaded{
          [](const NoDefense&) -> std::string { return "none"; },
          [](const FlwbcDefense& d) { return "flwbc:s=" + Num(d.s); },
          [](const CmaDefense&) -> std::string { return "cma"; },
          [](const CtmaDefense& d) { return "ctma:beta=" + Num(d.beta); },
          [](const CdpDefense& d) {
            return "cdp:clip=" + Num(d.clip) + ":sigma=" + Num(d.sigma);
          },
          [](const LdpDefense& d) {
            return "ldp:clip=" + Num(d.clip) + ":sigma=" + Num(d.sigma);
          },
      },
      policy);
}

void ValidateDefense(const DefensePolicy& policy) {
  auto check_dp = [](double clip, double sigma) {
    if (!(clip > 0.0)) throw ConfigError("defense clip must be > 0");
    if (!(sigma >= 0.0)) throw ConfigError("defense sigma must be >= 0");
  };
  std::visit(Overloaded{
                 [](const NoDefense&) {},
                 [](const FlwbcDefense& d) {
                   if (!(d.s >= 0.0)) {
                     throw ConfigError("defense s must be >= 0");
                   }
                 },
                 [](const CmaDefense&) {},
                 [](const CtmaDefense& d) {
                   if (!(d.beta >= 0.0 && d.beta < 0.5)) {
                     throw ConfigError("defense beta must lie in [0, 0.5), got " +
                                       Num(d.beta));
                   }
                 },
                 [&](const CdpDefense& d) { check_dp(d.clip, d.sigma); },
                 [&](const LdpDefense& d) { check_dp(d.clip, d.sigma); },
             },
             policy);
}

void AttackPolicy::Validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ConfigError("attack alpha must lie in [0, 1]");
  }
  if (malicious_batch_size < 1) {
    throw ConfigError("attack malicious_batch_size must be >= 1");
  }
  if (rh_lambda && !(*rh_lambda >= 0.0)) {
    throw ConfigError("attack rh_lambda must be >= 0");
  }
}

LearningRate LearningRate::Constant(double eta) {
  LearningRate lr;
  lr.kind = Kind::kConstant;
  lr.eta = eta;
  return lr;
}

LearningRate LearningRate::Decaying(double mu, double smoothness) {
  LearningRate lr;
  lr.kind = Kind::kDecaying;
  lr.mu = mu;
  lr.smoothness = smoothness;
  return lr;
}

double LearningRate::Eta(int round, int iteration, int local_iterations) const {
  if (kind == Kind::kConstant) return eta;
  const double gamma =
      std::max(8.0 * smoothness / mu, static_cast<double>(local_iterations));
  return 2.0 / (mu * (gamma + static_cast<double>(round) * local_iterations +
                      iteration));
}

void LearningRate::Validate() const {
  if (kind == Kind::kConstant) {
    if (!(eta > 0.0)) throw ConfigError("learning_rate eta must be > 0");
    return;
  }
  if (!(mu > 0.0)) throw ConfigError("learning_rate mu must be > 0");
  if (!(smoothness >= mu)) {
    throw ConfigError("learning_rate L must be >= mu");
  }
}

void FederationConfig::Validate() const {
  if (num_devices < 1) throw ConfigError("num_devices must be >= 1");
  if (devices_per_round < 1 || devices_per_round > num_devices) {
    throw ConfigError("devices_per_round must lie in [1, num_devices]");
  }
  if (local_epochs < 1) throw ConfigError("local_epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (rounds < 0) throw ConfigError("rounds must be >= 0");
  if (!(adversarial_prob >= 0.0 && adversarial_prob <= 1.0)) {
    throw ConfigError("adversarial_prob must lie in [0, 1]");
  }
  learning_rate.Validate();
  attack.Validate();
  ValidateDefense(defense);

  std::set<int> unique(attacker_ids.begin(), attacker_ids.end());
  if (unique.size() != attacker_ids.size()) {
    throw ConfigError("attacker_ids contains duplicates");
  }
  for (int id : attacker_ids) {
    if (id < 0 || id >= num_devices) {
      throw ConfigError("attacker_ids entry outside [0, num_devices)");
    }
  }
  if (adversarial_prob > 0.0 && !attacker_ids.empty()) {
    if (adversaries_per_round < 1 ||
        adversaries_per_round > static_cast<int>(attacker_ids.size())) {
      throw ConfigError(
          "adversaries_per_round must lie in [1, |attacker_ids|]");
    }
    if (adversaries_per_round > devices_per_round) {
      throw ConfigError("adversaries_per_round exceeds devices_per_round");
    }
  }
  const int benign = num_devices - static_cast<int>(attacker_ids.size());
  if (benign < devices_per_round) {
    throw ConfigError(
        "devices_per_round exceeds the number of benign devices");
  }
}

bool FederationConfig::IsAttacker(int client_id) const {
  return std::find(attacker_ids.begin(), attacker_ids.end(), client_id) !=
         attacker_ids.end();
}

int FederationConfig::LocalIterations(size_t shard_size) const {
  const size_t samples = static_cast<size_t>(local_epochs) * shard_size;
  return static_cast<int>((samples + batch_size - 1) / batch_size);
}

}  // namespace flsim
