// Copyright 2026 The dmarl Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace dmarl {

/// Seeded random stream. Every stochastic operation in the library takes one
/// of these explicitly; nothing reads global state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  /// Independent stream derived from (seed, tag). Deterministic.
  static Rng derive(std::uint64_t seed, std::uint64_t tag);

  double uniform();
  double normal();
  std::uint64_t next_u64() { return engine_(); }

  /// Draws an index from a discrete distribution. Weights need not be
  /// normalized; they must be nonnegative with a positive sum.
  int categorical(std::span<const double> weights);

  /// Uniform integer in [lo, hi].
  int uniform_int(int lo, int hi);

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

}  // namespace dmarl
