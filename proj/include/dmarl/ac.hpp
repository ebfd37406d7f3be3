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

#include <Eigen/Dense>

#include "dmarl/critic.hpp"
#include "dmarl/gossip.hpp"
#include "dmarl/mdp.hpp"
#include "dmarl/metrics.hpp"
#include "dmarl/policy.hpp"

namespace dmarl::ac {

struct AcConfig {
  double alpha = 20.0;  // actor step
  int iterations = 500;
  int batch = 100;  // N
  gossip::NoiseConfig noise;  // per-agent sigmas and T'
  critic::CriticConfig critic;
  std::uint64_t seed = 0;
  bool strict_rounds = false;  // count T' once per sample instead of once per iteration

  void validate(int num_agents) const;
  long long rounds_per_iteration() const;
  long long samples_per_iteration() const;
};

/// Random substreams of one run. Tags are fixed so that every driver draws
/// the same critic and actor chains for the same seed.
enum StreamTag : std::uint64_t {
  kCriticChain = 1,
  kActorChain = 2,
  kRewardNoise = 3,
  kOutputIterate = 4,
  kAlgorithm = 5,
};

/// An actor-chain batch after reward sharing.
struct SharedBatch {
  mdp::TrajectoryBatch batch;
  Eigen::MatrixXd estimates;   // M x N, row m is what agent m holds
  Eigen::VectorXd true_means;  // N, average reward of each record
};

/// Draws n records from the restart kernel. Rewards are evaluated at the
/// auxiliary successor, perturbed and mixed for noise.rounds gossip rounds.
SharedBatch collect_shared_batch(const mdp::MultiAgentMdp& mdp, const gossip::MixingMatrix& w,
                                 const policy::JointSoftmaxPolicy& pi,
                                 const gossip::NoiseConfig& noise, mdp::ChainState& chain,
                                 Rng& noise_rng, int n);

/// Agent m's stochastic partial policy gradient
///   (1/N) sum_i [r_i + gamma phi(s'_i)^T theta - phi(s_i)^T theta] psi^(m)(a_i^(m) | s_i)
/// where r_i is agent m's own shared-reward estimate and s'_i the auxiliary
/// successor. Returns an |S| x |A_m| table.
Eigen::MatrixXd local_policy_gradient_estimate(const mdp::TrajectoryBatch& batch,
                                               const Eigen::VectorXd& own_estimates,
                                               const Eigen::VectorXd& theta,
                                               const policy::JointSoftmaxPolicy& pi,
                                               const policy::FeatureMap& features, double gamma,
                                               int m);

/// Same estimate from precomputed critic values Phi theta and agent m's
/// action table (pi.local_distribution(m)).
Eigen::MatrixXd local_policy_gradient_estimate(const mdp::TrajectoryBatch& batch,
                                               const Eigen::VectorXd& own_estimates,
                                               const Eigen::VectorXd& critic_values,
                                               const Eigen::MatrixXd& local_dist,
                                               const policy::JointSoftmaxPolicy& pi, double gamma,
                                               int m);

/// Chain whose first state is drawn from the restart distribution.
mdp::ChainState start_chain(const mdp::MultiAgentMdp& mdp, Rng rng);

/// Draws the reported iterate uniformly from 1..completed.
int pick_output_iterate(std::uint64_t seed, int completed);

metrics::RunResult run_ac(const mdp::MultiAgentMdp& mdp, const gossip::MixingMatrix& w,
                          const policy::FeatureMap& features, const AcConfig& cfg,
                          const policy::JointSoftmaxPolicy& initial,
                          const metrics::Recorder& recorder);

}  // namespace dmarl::ac
