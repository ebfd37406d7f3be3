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

#include "dmarl/metrics.hpp"

#include "dmarl/error.hpp"
#include "dmarl/oracle.hpp"

namespace dmarl::metrics {

std::optional<double> relative_reward_error(const Eigen::MatrixXd& estimates,
                                            const Eigen::VectorXd& true_means) {
  require(estimates.cols() == true_means.size() && estimates.cols() > 0,
          "relative reward error: one estimate column per sample required");
  const double rbar = true_means.mean();
  if (rbar == 0.0) return std::nullopt;
  const Eigen::VectorXd per_agent = estimates.rowwise().mean();
  const double m = static_cast<double>(estimates.rows());
  return (per_agent.array() - rbar).square().sum() / (m * rbar * rbar);
}

std::optional<double> relative_td_error(const critic::CriticState& critic,
                                        const Eigen::VectorXd& theta_star) {
  require(critic.dim() == theta_star.size(), "relative TD error: dimension mismatch");
  const double denom = theta_star.squaredNorm();
  if (denom == 0.0) return std::nullopt;
  const double num = (critic.thetas.rowwise() - theta_star.transpose()).squaredNorm();
  return num / (static_cast<double>(critic.num_agents()) * denom);
}

Recorder::Recorder(const mdp::MultiAgentMdp& mdp, const policy::FeatureMap& features,
                   double j_star, RecordSink sink)
    : mdp_(mdp), features_(features), j_star_(j_star), sink_(std::move(sink)) {}

std::optional<Eigen::VectorXd> Recorder::td_target(const policy::JointSoftmaxPolicy& pi) const {
  try {
    return oracle::td_limit(mdp_, pi, features_).theta_star;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kNumeric) throw;
    return std::nullopt;
  }
}

void Recorder::emit(RunResult& result, RunRecord row,
                    const policy::JointSoftmaxPolicy& after) const {
  const oracle::ObjectiveGradient og = oracle::objective_and_gradient(mdp_, after);
  row.j = og.j;
  row.grad_norm_sq = og.grad.squaredNorm();
  row.opt_gap = j_star_ - og.j;
  result.records.push_back(row);
  result.iterates.push_back(after.flatten());
  if (sink_) sink_(row);
}

void mark_aborted(RunResult& result, int iteration, const std::string& why) {
  result.aborted = true;
  result.abort_iteration = iteration;
  result.abort_reason = why;
}

}  // namespace dmarl::metrics
