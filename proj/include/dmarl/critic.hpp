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

#include <functional>
#include <span>

#include <Eigen/Dense>

#include "dmarl/gossip.hpp"
#include "dmarl/mdp.hpp"
#include "dmarl/policy.hpp"

namespace dmarl::critic {

struct CriticConfig {
  double beta = 0.5;        // TD step size
  int t_c = 50;             // inner TD iterations
  int n_c = 10;             // samples per inner iteration
  int t_c_prime = 10;       // terminal gossip rounds
  Eigen::VectorXd theta_init;  // shared initial vector; empty means zero
  bool warm_start = false;  // carry the previous critic over instead of resetting

  void validate() const;
};

/// One critic vector per agent, stored as the rows of an M x d matrix.
struct CriticState {
  Eigen::MatrixXd thetas;

  int num_agents() const { return static_cast<int>(thetas.rows()); }
  int dim() const { return static_cast<int>(thetas.cols()); }
  Eigen::VectorXd theta(int m) const { return thetas.row(m).transpose(); }
  Eigen::VectorXd mean() const { return thetas.colwise().mean().transpose(); }
};

struct MinibatchStats {
  Eigen::MatrixXd b_matrix;   // d x d, mean of phi(s) (gamma phi(s') - phi(s))^T
  Eigen::MatrixXd b_vectors;  // M x d, row m = mean of R^(m)(s,a,s') phi(s)
};

/// Mini-batch TD statistics over consecutive records, using the chain
/// successor and each agent's own raw reward.
MinibatchStats minibatch_statistics(std::span<const mdp::Transition> records,
                                    const policy::FeatureMap& features,
                                    const mdp::MultiAgentMdp& mdp);
/// Same, but rejects batches that were not generated by the true kernel.
MinibatchStats minibatch_statistics(const mdp::TrajectoryBatch& batch,
                                    const policy::FeatureMap& features,
                                    const mdp::MultiAgentMdp& mdp);

/// Passed to the observer after every consensus TD step.
struct TdStep {
  int step;
  const MinibatchStats& stats;
  const Eigen::MatrixXd& before;
  const Eigen::MatrixXd& after;
};
using TdObserver = std::function<void(const TdStep&)>;

/// Decentralized mini-batch TD:
///   theta^(m) <- sum_m' W[m,m'] theta^(m') + beta (B_t theta^(m) + b_t^(m))
/// for t_c steps of n_c fresh samples each (true kernel), then t_c_prime pure
/// gossip rounds. Consumes t_c * n_c samples and t_c + t_c_prime rounds.
///
/// `previous` is used as the starting point when cfg.warm_start is set.
CriticState run_decentralized_td(const mdp::MultiAgentMdp& mdp,
                                 const policy::JointSoftmaxPolicy& pi,
                                 const gossip::MixingMatrix& w,
                                 const policy::FeatureMap& features, const CriticConfig& cfg,
                                 mdp::ChainState& chain, const CriticState* previous = nullptr,
                                 const TdObserver& observer = {});

}  // namespace dmarl::critic
