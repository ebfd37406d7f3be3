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
#include <vector>

#include <Eigen/Dense>

#include "dmarl/gossip.hpp"
#include "dmarl/mdp.hpp"
#include "dmarl/metrics.hpp"
#include "dmarl/policy.hpp"

namespace dmarl::dacrp {

/// One-hot reward features over (s, a, s') triplets.
class RewardFeatures {
 public:
  static constexpr long long kDefaultCap = 100000;

  /// d_r = |S|^2 |A|; rejected when that exceeds `cap`.
  static RewardFeatures identity_triplets(const mdp::MultiAgentMdp& mdp,
                                          long long cap = kDefaultCap);

  int dim() const { return dim_; }
  /// Coordinate carrying the single 1 of f(s, a, s').
  int slot(int s, int a, int next) const {
    return slots_[static_cast<std::size_t>((s * num_joint_ + a) * num_states_ + next)];
  }
  Eigen::VectorXd dense(int s, int a, int next) const;

 private:
  int num_states_ = 0;
  int num_joint_ = 0;
  int dim_ = 0;
  std::vector<int> slots_;
};

/// c (t + 1)^(-p); p = 0 gives a constant step.
struct StepSchedule {
  double scale = 1.0;
  double power = 0.0;
  double at(int t) const;
};

struct DacRpConfig {
  int iterations = 2000;
  int actor_batch = 1;
  int critic_batch = 1;
  StepSchedule beta_v{5.0, 0.8};      // critic and reward model
  StepSchedule beta_theta{2.0, 0.9};  // actor
  std::uint64_t seed = 0;
  /// Test hook: replace the reward model by its exact least-squares fit.
  bool exact_reward = false;

  static DacRpConfig rp1();
  static DacRpConfig rp100();
  void validate() const;
};

/// Per-agent reward-model parameters, one row per agent.
using RewardModel = Eigen::MatrixXd;

/// Least-squares fit of the average reward over all triplets.
Eigen::VectorXd exact_reward_fit(const mdp::MultiAgentMdp& mdp, const RewardFeatures& f);

/// A / B with A the agent- and triplet-averaged squared residual of the
/// model against the average reward, B the triplet-averaged squared average
/// reward.
double reward_model_error(const mdp::MultiAgentMdp& mdp, const RewardFeatures& f,
                          const RewardModel& lambda);

metrics::RunResult run_dacrp(const mdp::MultiAgentMdp& mdp, const gossip::MixingMatrix& w,
                             const policy::FeatureMap& features, const RewardFeatures& reward_features,
                             const DacRpConfig& cfg, const policy::JointSoftmaxPolicy& initial,
                             const metrics::Recorder& recorder);

}  // namespace dmarl::dacrp
