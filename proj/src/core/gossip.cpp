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

#include "dmarl/gossip.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dmarl/error.hpp"

namespace dmarl::gossip {

namespace {

double second_singular_value(const Eigen::MatrixXd& w) {
  if (w.rows() < 2) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(w);
  // Singular values come back sorted in decreasing order.
  return svd.singularValues()(1);
}

}  // namespace

MixingMatrix::MixingMatrix(Eigen::MatrixXd weights)
    : weights_(std::move(weights)), sigma_(second_singular_value(weights_)) {}

MixingMatrix MixingMatrix::ring(int m, double self_weight, double neighbor_weight) {
  require(m >= 2, "ring topology needs at least 2 agents");
  require(self_weight >= 0.0 && neighbor_weight >= 0.0,
          "ring weights must be nonnegative");
  require(std::abs(self_weight + 2.0 * neighbor_weight - 1.0) <= kStochasticTolerance,
          "ring weights must satisfy self_weight + 2 * neighbor_weight = 1");
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    w(i, i) += self_weight;
    w(i, (i + 1) % m) += neighbor_weight;
    w(i, (i + m - 1) % m) += neighbor_weight;
  }
  return from_weights(std::move(w));
}

MixingMatrix MixingMatrix::complete(int m, double self_weight) {
  require(m >= 2, "complete topology needs at least 2 agents");
  require(self_weight >= 0.0 && self_weight <= 1.0,
          "complete topology self weight must lie in [0, 1]");
  const double off = (1.0 - self_weight) / (m - 1);
  Eigen::MatrixXd w = Eigen::MatrixXd::Constant(m, m, off);
  w.diagonal().setConstant(self_weight);
  return from_weights(std::move(w));
}

MixingMatrix MixingMatrix::from_weights(Eigen::MatrixXd weights) {
  require(weights.rows() >= 1 && weights.rows() == weights.cols(),
          "mixing matrix must be square and nonempty");
  require(weights.allFinite(), "mixing matrix has non-finite entries");
  require((weights.array() >= 0.0).all(), "mixing matrix has negative entries");
  for (Eigen::Index i = 0; i < weights.rows(); ++i) {
    const double row = weights.row(i).sum();
    const double col = weights.col(i).sum();
    if (std::abs(row - 1.0) > kStochasticTolerance ||
        std::abs(col - 1.0) > kStochasticTolerance) {
      std::ostringstream msg;
      msg << "mixing matrix is not doubly stochastic (row " << i << " sums to "
          << row << ", column sums to " << col << ")";
      fail(ErrorKind::kInvalidArgument, msg.str());
    }
  }
  return MixingMatrix(std::move(weights));
}

Eigen::MatrixXd MixingMatrix::power(int n) const {
  require(n >= 0, "matrix power must be nonnegative");
  Eigen::MatrixXd out = Eigen::MatrixXd::Identity(size(), size());
  for (int i = 0; i < n; ++i) out = weights_ * out;
  return out;
}

Eigen::MatrixXd gossip_rounds(const MixingMatrix& w, const Eigen::MatrixXd& values,
                              int rounds) {
  require(values.rows() == w.size(), "gossip: value rows must equal agent count");
  require(rounds >= 0, "gossip: rounds must be nonnegative");
  Eigen::MatrixXd out = values;
  for (int r = 0; r < rounds; ++r) out = w.weights() * out;
  return out;
}

double consensus_error(const Eigen::MatrixXd& values) {
  const Eigen::RowVectorXd mean = values.colwise().mean();
  return (values.rowwise() - mean).norm();
}

NoiseConfig NoiseConfig::uniform(int agents, double sigma, int rounds) {
  return NoiseConfig{std::vector<double>(static_cast<std::size_t>(agents), sigma),
                     rounds};
}

double NoiseConfig::max_sigma() const {
  return sigmas.empty() ? 0.0 : *std::max_element(sigmas.begin(), sigmas.end());
}

Eigen::MatrixXd noisy_reward_estimates_batch(const MixingMatrix& w,
                                             const Eigen::MatrixXd& rewards,
                                             const NoiseConfig& noise, Rng& rng) {
  const int m = w.size();
  require(rewards.rows() == m, "reward sharing: reward rows must equal agent count");
  require(static_cast<int>(noise.sigmas.size()) == m,
          "reward sharing: one noise level per agent required");
  require(noise.rounds >= 0, "reward sharing: rounds must be nonnegative");
  for (double s : noise.sigmas) require(s >= 0.0, "noise sigmas must be nonnegative");

  Eigen::MatrixXd perturbed = rewards;
  for (Eigen::Index i = 0; i < rewards.cols(); ++i) {
    for (int a = 0; a < m; ++a) {
      const double sigma = noise.sigmas[static_cast<std::size_t>(a)];
      if (sigma > 0.0) perturbed(a, i) *= 1.0 + sigma * rng.normal();
    }
  }
  return gossip_rounds(w, perturbed, noise.rounds);
}

Eigen::VectorXd noisy_reward_estimates(const MixingMatrix& w,
                                       const Eigen::VectorXd& rewards,
                                       const NoiseConfig& noise, Rng& rng) {
  return noisy_reward_estimates_batch(w, Eigen::MatrixXd(rewards), noise, rng).col(0);
}

}  // namespace dmarl::gossip
