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

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dmarl/rng.hpp"

namespace dmarl::policy {

/// Minimal interface the samplers need. Only the tabular softmax ships.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual int num_states() const = 0;
  virtual int num_joint_actions() const = 0;
  virtual double joint_probability(int s, int joint_action) const = 0;
  virtual int sample_joint_action(int s, Rng& rng) const = 0;
};

/// Product of per-agent tabular softmax policies,
/// pi^(m)(a_m | s) proportional to exp(omega^(m)[s, a_m]).
///
/// Joint actions use the mixed-radix encoding with agent 0 most significant,
/// matching mdp::MultiAgentMdp.
class JointSoftmaxPolicy final : public Policy {
 public:
  /// Zero parameters (uniform policy).
  JointSoftmaxPolicy(int num_states, std::vector<int> action_counts);
  /// Takes per-agent |S| x |A_m| tables; rejects non-finite entries.
  explicit JointSoftmaxPolicy(std::vector<Eigen::MatrixXd> params);

  /// Every entry i.i.d. standard Gaussian, drawn agent by agent, row-major.
  static JointSoftmaxPolicy gaussian(int num_states, std::vector<int> action_counts,
                                     Rng& rng);

  int num_states() const override { return num_states_; }
  int num_agents() const { return static_cast<int>(params_.size()); }
  int num_joint_actions() const override { return num_joint_; }
  const std::vector<int>& action_counts() const { return action_counts_; }

  const Eigen::MatrixXd& params(int m) const { return params_[static_cast<std::size_t>(m)]; }
  const std::vector<Eigen::MatrixXd>& all_params() const { return params_; }
  void set_params(int m, Eigen::MatrixXd table);

  /// Total parameter count, sum over agents of |S| * |A_m|.
  int dim() const { return dim_; }
  /// Offset of agent m's block in the flattened parameter vector.
  int offset(int m) const { return offsets_[static_cast<std::size_t>(m)]; }
  /// Index of omega^(m)[s, a] in the flattened vector (agent-major, row-major).
  int flat_index(int m, int s, int a) const {
    return offsets_[static_cast<std::size_t>(m)] + s * action_counts_[static_cast<std::size_t>(m)] + a;
  }
  Eigen::VectorXd flatten() const;
  static JointSoftmaxPolicy unflatten(int num_states, std::vector<int> action_counts,
                                      const Eigen::VectorXd& flat);

  /// Softmax of omega^(m)[s, :] with max subtraction.
  Eigen::VectorXd action_distribution(int m, int s) const;
  /// All of agent m's action distributions as an |S| x |A_m| table.
  Eigen::MatrixXd local_distribution(int m) const;
  /// |S| x |A_joint| matrix of joint probabilities.
  Eigen::MatrixXd joint_distribution() const;

  double joint_probability(int s, int joint_action) const override;
  int sample_joint_action(int s, Rng& rng) const override;

  int agent_action(int joint_action, int m) const;
  int encode(std::span<const int> per_agent) const;

  /// Gradient of ln pi^(m)(a_m | s) with respect to omega^(m): a |S| x |A_m|
  /// table whose only nonzero row is s, equal to e_{a_m} - pi^(m)(. | s).
  Eigen::MatrixXd local_score(int m, int s, int a_m) const;
  /// Concatenated joint score, flattened like flatten().
  Eigen::VectorXd joint_score(int s, int joint_action) const;

 private:
  void init_layout();

  int num_states_ = 0;
  std::vector<int> action_counts_;
  std::vector<Eigen::MatrixXd> params_;
  std::vector<int> offsets_;
  std::vector<int> radix_;  // place value of each agent in the joint index
  int num_joint_ = 1;
  int dim_ = 0;
};

/// State features, one row per state.
class FeatureMap {
 public:
  /// Rejects rows with norm above 1 + 1e-12.
  explicit FeatureMap(Eigen::MatrixXd table);

  int dim() const { return static_cast<int>(table_.cols()); }
  int num_states() const { return static_cast<int>(table_.rows()); }
  const Eigen::MatrixXd& table() const { return table_; }
  auto row(int s) const { return table_.row(s); }

 private:
  Eigen::MatrixXd table_;
};

FeatureMap build_identity_features(int num_states);

}  // namespace dmarl::policy
