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

#include <vector>

#include <Eigen/Dense>

#include "dmarl/rng.hpp"

namespace dmarl::gossip {

/// Doubly stochastic communication matrix W for one synchronous gossip round.
///
/// Immutable after construction. sigma() is the second-largest singular value
/// of W, which bounds the per-round contraction of the consensus error.
class MixingMatrix {
 public:
  /// Ring of m agents: each keeps self_weight and sends neighbor_weight to
  /// both neighbours. Requires self_weight + 2 * neighbor_weight == 1.
  static MixingMatrix ring(int m, double self_weight, double neighbor_weight);

  /// Fully connected network: diagonal self_weight, off-diagonal
  /// (1 - self_weight) / (m - 1).
  static MixingMatrix complete(int m, double self_weight);

  /// Validates an arbitrary matrix (square, nonnegative, rows and columns
  /// summing to one within 1e-9).
  static MixingMatrix from_weights(Eigen::MatrixXd weights);

  int size() const { return static_cast<int>(weights_.rows()); }
  const Eigen::MatrixXd& weights() const { return weights_; }
  double sigma() const { return sigma_; }

  /// W^n, by repeated multiplication.
  Eigen::MatrixXd power(int n) const;

 private:
  explicit MixingMatrix(Eigen::MatrixXd weights);

  Eigen::MatrixXd weights_;
  double sigma_ = 0.0;
};

inline constexpr double kStochasticTolerance = 1e-9;

/// Applies `rounds` synchronous averaging rounds to the rows of `values`
/// (one row per agent): returns W^rounds * values.
Eigen::MatrixXd gossip_rounds(const MixingMatrix& w, const Eigen::MatrixXd& values,
                              int rounds);

/// Frobenius norm of the deviation of each row from the row mean, i.e.
/// ||(I - 11^T / M) values||_F.
double consensus_error(const Eigen::MatrixXd& values);

struct NoiseConfig {
  std::vector<double> sigmas;  // per-agent multiplicative noise std devs
  int rounds = 0;              // T'

  static NoiseConfig uniform(int agents, double sigma, int rounds);
  double max_sigma() const;
};

/// Noisy reward sharing: agent m perturbs its reward to R^(m) (1 + e^(m)),
/// e^(m) ~ N(0, sigma_m^2), then all agents run noise.rounds gossip rounds.
/// Component m of the result is agent m's estimate of the average reward.
Eigen::VectorXd noisy_reward_estimates(const MixingMatrix& w,
                                       const Eigen::VectorXd& rewards,
                                       const NoiseConfig& noise, Rng& rng);

/// Batched variant: column i of `rewards` (M x N) is one sample. Noise is drawn
/// sample by sample, agent by agent; the T' rounds act on all columns at once.
Eigen::MatrixXd noisy_reward_estimates_batch(const MixingMatrix& w,
                                             const Eigen::MatrixXd& rewards,
                                             const NoiseConfig& noise, Rng& rng);

}  // namespace dmarl::gossip
