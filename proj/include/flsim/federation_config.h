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

#ifndef FLSIM_FEDERATION_CONFIG_H_
#define FLSIM_FEDERATION_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace flsim {

struct NoDefense {};
// Client-side perturbation of low-curvature coordinates; s is the std of the
// Laplace threshold/noise matrix.
struct FlwbcDefense {
  double s = 0.4;
};
struct CmaDefense {};
struct CtmaDefense {
  double beta = 0.2;
};
struct CdpDefense {
  double clip = 5.0;
  double sigma = 1.0;
};
struct LdpDefense {
  double clip = 5.0;
  double sigma = 1.0;
};

using DefensePolicy = std::variant<NoDefense, FlwbcDefense, CmaDefense,
                                   CtmaDefense, CdpDefense, LdpDefense>;

// Short label used in logs, e.g. "flwbc:s=0.4" or "cdp:clip=5:sigma=1".
std::string DefenseTag(const DefensePolicy& policy);
// Throws ConfigError naming the offending field ("s", "beta", "clip", "sigma").
void ValidateDefense(const DefensePolicy& policy);

struct AttackPolicy {
  // Weight of the benign objective in the blended malicious gradient.
  double alpha = 0.5;
  // D_M rows per malicious step; the full D_M is used when it is smaller.
  int malicious_batch_size = 10;
  // Strength of the kernel-seeking regularizer. Unset disables boosting.
  std::optional<double> rh_lambda;

  void Validate() const;
};

struct LearningRate {
  enum class Kind { kConstant, kDecaying };

  Kind kind = Kind::kConstant;
  double eta = 0.01;
  // kDecaying: eta_{t,i} = 2 / (mu * (gamma + t*I + i)), gamma = max(8L/mu, I).
  double mu = 1.0;
  double smoothness = 1.0;

  static LearningRate Constant(double eta);
  static LearningRate Decaying(double mu, double smoothness);

  double Eta(int round, int iteration, int local_iterations) const;
  void Validate() const;
};

struct FederationConfig {
  int num_devices = 30;
  int devices_per_round = 6;
  int local_epochs = 1;
  int batch_size = 32;
  LearningRate learning_rate = LearningRate::Constant(0.01);
  int rounds = 60;
  std::vector<int> attacker_ids;
  double adversarial_prob = 0.1;
  int adversaries_per_round = 3;
  AttackPolicy attack;
  DefensePolicy defense = NoDefense{};
  uint64_t master_seed = 0;

  // Throws ConfigError naming the offending field.
  void Validate() const;
  bool IsAttacker(int client_id) const;
  // ceil(local_epochs * shard_size / batch_size).
  int LocalIterations(size_t shard_size) const;
};

}  // namespace flsim

#endif  // FLSIM_FEDERATION_CONFIG_H_
