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

#ifndef FLSIM_RNG_H_
#define FLSIM_RNG_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace flsim {

// SplitMix64 finalizer. Used to hash stream keys into engine seeds.
uint64_t SplitMix64(uint64_t x);

// A seeded random stream. The engine output is fixed by the standard, and every
// derived draw is computed here rather than through <random> distributions,
// whose algorithms are implementation-defined. Streams therefore replay
// identically across toolchains.
class RngStream {
 public:
  explicit RngStream(uint64_t seed) : engine_(seed) {}

  uint64_t NextU64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double Uniform01();
  // Uniform on (0, 1).
  double UniformOpen01();
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform01(); }
  // Standard normal via Box-Muller (one value per call, no caching).
  double Normal();
  // Laplace(0, scale) by inverse CDF.
  double Laplace(double scale);
  // Unbiased integer in [0, n). n must be positive.
  size_t UniformIndex(size_t n);
  // Fisher-Yates.
  void Shuffle(std::span<size_t> items);

 private:
  std::mt19937_64 engine_;
};

}  // namespace flsim

#endif  // FLSIM_RNG_H_
