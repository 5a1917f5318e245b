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

#include "flsim/defense.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "flsim/errors.h"

namespace flsim {
namespace {

void CheckModels(std::span<const ParamVec> models) {
  if (models.empty()) throw ConfigError("aggregation needs at least one model");
  for (const ParamVec& m : models) {
    if (!m.SameLayout(models.front())) {
      throw InternalError("aggregation over mismatched parameter layouts");
    }
  }
}

// Applies `reduce` to the sorted client values of every coordinate.
template <class Reduce>
ParamVec Coordinatewise(std::span<const ParamVec> models, Reduce reduce) {
  CheckModels(models);
  ParamVec out = ParamVec::Zeros(models.front().spec_ptr());
  std::vector<double> column(models.size());
  for (size_t j = 0; j < out.size(); ++j) {
    for (size_t k = 0; k < models.size(); ++k) column[k] = models[k][j];
    std::sort(column.begin(), column.end());
    out[j] = reduce(column);
  }
  return out;
}

}  // namespace

FlwbcStepResult FlwbcStep(FlwbcState& state, const ParamVec& w_before,
                          const ParamVec& w_after_sgd, double eta, double s,
                          RngStream& rng) {
  if (!(eta > 0.0)) throw ConfigError("FL-WBC step needs eta > 0");
  FlwbcStepResult result{w_after_sgd, LaplaceNoise(w_before.spec_ptr(), s, rng),
                         0};
  if (state.first_batch_done) {
    const Vector& w = w_after_sgd.values();
    const Vector& w1 = w_before.values();
    const Vector& w2 = state.w_minus_1.values();
    const Vector& noise = result.noise.values();
    Vector& out = result.params.mutable_values();
    for (Eigen::Index j = 0; j < out.size(); ++j) {
      const double second_diff = (w[j] - w1[j]) - (w1[j] - w2[j]);
      if (std::abs(second_diff) - eta * std::abs(noise[j]) <= 0.0) {
        // Skipping zero draws keeps the sign of -0.0 entries intact.
        if (noise[j] != 0.0) out[j] += eta * noise[j];
        ++result.masked;
      }
    }
  }
  state.w_minus_2 = state.w_minus_1;
  state.w_minus_1 = w_before;
  state.first_batch_done = true;
  return result;
}

ParamVec CmaAggregate(std::span<const ParamVec> models) {
  return Coordinatewise(models, [](const std::vector<double>& v) {
    const size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
  });
}

ParamVec CtmaAggregate(std::span<const ParamVec> models, double beta) {
  if (!(beta >= 0.0 && beta < 0.5)) {
    throw ConfigError("defense beta must lie in [0, 0.5)");
  }
  const size_t k = models.size();
  const size_t trim = static_cast<size_t>(std::floor(beta * k));
  if (2 * trim >= k) {
    throw ConfigError("trimmed mean with beta " + std::to_string(beta) +
                      " removes all " + std::to_string(k) + " values");
  }
  return Coordinatewise(models, [trim](const std::vector<double>& v) {
    double sum = 0.0;
    for (size_t i = trim; i < v.size() - trim; ++i) sum += v[i];
    return sum / static_cast<double>(v.size() - 2 * trim);
  });
}

ParamVec CdpApply(std::span<const ParamVec> models,
                  std::span<const double> weights, const ParamVec& prev_global,
                  double clip, double sigma, RngStream& rng) {
  CheckModels(models);
  if (weights.size() != models.size()) {
    throw InternalError("CDP weight count differs from model count");
  }
  if (!(sigma >= 0.0)) throw ConfigError("defense sigma must be >= 0");
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw InternalError("CDP weights sum to zero");

  ParamVec avg = ParamVec::Zeros(prev_global.spec_ptr());
  for (size_t k = 0; k < models.size(); ++k) {
    avg.Axpy(weights[k] / total, ClipToNorm(models[k] - prev_global, clip));
  }
  avg += LaplaceNoise(prev_global.spec_ptr(),
                      sigma / static_cast<double>(models.size()), rng);
  return prev_global + avg;
}

ParamVec LdpApply(const ParamVec& update, double clip, double sigma,
                  RngStream& rng) {
  return ClipToNorm(update, clip) + LaplaceNoise(update.spec_ptr(), sigma, rng);
}

}  // namespace flsim
