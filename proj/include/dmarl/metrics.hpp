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
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dmarl/critic.hpp"
#include "dmarl/mdp.hpp"
#include "dmarl/policy.hpp"

namespace dmarl::metrics {

/// One row of a run log. Counters are cumulative after iteration `iter`;
/// J, grad_norm_sq and opt_gap describe the policy produced by that
/// iteration; the relative errors describe the estimates used inside it.
struct RunRecord {
  int iter = 0;
  long long samples = 0;
  long long comm_rounds = 0;
  double j = 0.0;
  double grad_norm_sq = 0.0;
  double opt_gap = 0.0;
  std::optional<double> td_rel_err;
  std::optional<double> reward_rel_err;
  std::optional<double> extra;  // algorithm specific (DAC-RP: reward-model A/B)
};

struct RunResult {
  std::vector<RunRecord> records;
  /// Flattened policy parameters after every iteration; iterates[0] is omega_0.
  std::vector<Eigen::VectorXd> iterates;
  /// NAC only: the natural-gradient estimate h_t used by every iteration.
  std::vector<Eigen::VectorXd> directions;
  int output_iterate = 0;  // uniform over 1..(completed iterations)
  bool aborted = false;
  int abort_iteration = 0;
  std::string abort_reason;
};

using RecordSink = std::function<void(const RunRecord&)>;

/// (1 / (M rbar^2)) sum_m (rbar^(m) - rbar)^2 with rbar^(m) the batch mean of
/// agent m's estimates (row m of the M x N matrix) and rbar the batch mean
/// of the true average rewards. Empty when rbar == 0.
std::optional<double> relative_reward_error(const Eigen::MatrixXd& estimates,
                                            const Eigen::VectorXd& true_means);

/// (1 / (M ||theta*||^2)) sum_m ||theta^(m) - theta*||^2. Empty when
/// theta* == 0.
std::optional<double> relative_td_error(const critic::CriticState& critic,
                                        const Eigen::VectorXd& theta_star);

/// Shared per-iteration bookkeeping for the actor-critic drivers.
class Recorder {
 public:
  Recorder(const mdp::MultiAgentMdp& mdp, const policy::FeatureMap& features, double j_star,
           RecordSink sink);

  /// theta* for the policy in use, or empty when undefined (e.g. the true
  /// kernel has no unique stationary law).
  std::optional<Eigen::VectorXd> td_target(const policy::JointSoftmaxPolicy& pi) const;

  /// Fills J, grad_norm_sq and opt_gap for `after`, then forwards the row.
  void emit(RunResult& result, RunRecord row, const policy::JointSoftmaxPolicy& after) const;

 private:
  const mdp::MultiAgentMdp& mdp_;
  const policy::FeatureMap& features_;
  double j_star_;
  RecordSink sink_;
};

/// Shared tail of every driver: mark a divergence.
void mark_aborted(RunResult& result, int iteration, const std::string& why);

}  // namespace dmarl::metrics
