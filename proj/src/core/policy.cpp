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

#include "dmarl/policy.hpp"

#include <cmath>

#include "dmarl/error.hpp"

namespace dmarl::policy {

JointSoftmaxPolicy::JointSoftmaxPolicy(int num_states, std::vector<int> action_counts)
    : num_states_(num_states), action_counts_(std::move(action_counts)) {
  require(num_states_ >= 1, "policy needs at least one state");
  require(!action_counts_.empty(), "policy needs at least one agent");
  for (int a : action_counts_) {
    require(a >= 1, "every agent needs at least one action");
    params_.push_back(Eigen::MatrixXd::Zero(num_states_, a));
  }
  init_layout();
}

JointSoftmaxPolicy::JointSoftmaxPolicy(std::vector<Eigen::MatrixXd> params)
    : params_(std::move(params)) {
  require(!params_.empty(), "policy needs at least one agent");
  num_states_ = static_cast<int>(params_.front().rows());
  require(num_states_ >= 1, "policy needs at least one state");
  for (const auto& table : params_) {
    require(table.rows() == num_states_, "all parameter tables need |S| rows");
    require(table.cols() >= 1, "every agent needs at least one action");
    require(table.allFinite(), "policy parameters must be finite");
    action_counts_.push_back(static_cast<int>(table.cols()));
  }
  init_layout();
}

void JointSoftmaxPolicy::init_layout() {
  const std::size_t m = action_counts_.size();
  offsets_.assign(m, 0);
  radix_.assign(m, 1);
  dim_ = 0;
  for (std::size_t i = 0; i < m; ++i) {
    offsets_[i] = dim_;
    dim_ += num_states_ * action_counts_[i];
  }
  num_joint_ = 1;
  for (std::size_t i = m; i-- > 0;) {
    radix_[i] = num_joint_;
    num_joint_ *= action_counts_[i];
  }
}

JointSoftmaxPolicy JointSoftmaxPolicy::gaussian(int num_states,
                                                std::vector<int> action_counts,
                                                Rng& rng) {
  JointSoftmaxPolicy out(num_states, std::move(action_counts));
  for (auto& table : out.params_) {
    for (int s = 0; s < table.rows(); ++s) {
      for (int a = 0; a < table.cols(); ++a) table(s, a) = rng.normal();
    }
  }
  return out;
}

void JointSoftmaxPolicy::set_params(int m, Eigen::MatrixXd table) {
  require(m >= 0 && m < num_agents(), "agent index out of range");
  require(table.rows() == num_states_ &&
              table.cols() == action_counts_[static_cast<std::size_t>(m)],
          "parameter table has the wrong shape");
  require(table.allFinite(), "policy parameters must be finite");
  params_[static_cast<std::size_t>(m)] = std::move(table);
}

Eigen::VectorXd JointSoftmaxPolicy::flatten() const {
  Eigen::VectorXd flat(dim_);
  for (int m = 0; m < num_agents(); ++m) {
    const auto& table = params(m);
    for (int s = 0; s < num_states_; ++s) {
      for (int a = 0; a < table.cols(); ++a) flat(flat_index(m, s, a)) = table(s, a);
    }
  }
  return flat;
}

JointSoftmaxPolicy JointSoftmaxPolicy::unflatten(int num_states,
                                                 std::vector<int> action_counts,
                                                 const Eigen::VectorXd& flat) {
  JointSoftmaxPolicy out(num_states, std::move(action_counts));
  require(flat.size() == out.dim(), "flat parameter vector has the wrong length");
  require(flat.allFinite(), "policy parameters must be finite");
  for (int m = 0; m < out.num_agents(); ++m) {
    auto& table = out.params_[static_cast<std::size_t>(m)];
    for (int s = 0; s < num_states; ++s) {
      for (int a = 0; a < table.cols(); ++a) table(s, a) = flat(out.flat_index(m, s, a));
    }
  }
  return out;
}

Eigen::VectorXd JointSoftmaxPolicy::action_distribution(int m, int s) const {
  const Eigen::VectorXd logits = params(m).row(s).transpose();
  const Eigen::VectorXd e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

Eigen::MatrixXd JointSoftmaxPolicy::local_distribution(int m) const {
  const Eigen::MatrixXd& w = params(m);
  Eigen::MatrixXd out = (w.colwise() - w.rowwise().maxCoeff()).array().exp().matrix();
  out.array().colwise() /= out.rowwise().sum().array();
  return out;
}

Eigen::MatrixXd JointSoftmaxPolicy::joint_distribution() const {
  Eigen::MatrixXd out(num_states_, num_joint_);
  std::vector<Eigen::VectorXd> local(static_cast<std::size_t>(num_agents()));
  for (int s = 0; s < num_states_; ++s) {
    for (int m = 0; m < num_agents(); ++m) local[static_cast<std::size_t>(m)] = action_distribution(m, s);
    for (int a = 0; a < num_joint_; ++a) {
      double p = 1.0;
      for (int m = 0; m < num_agents(); ++m) p *= local[static_cast<std::size_t>(m)](agent_action(a, m));
      out(s, a) = p;
    }
  }
  return out;
}

double JointSoftmaxPolicy::joint_probability(int s, int joint_action) const {
  double p = 1.0;
  for (int m = 0; m < num_agents(); ++m) {
    p *= action_distribution(m, s)(agent_action(joint_action, m));
  }
  return p;
}

int JointSoftmaxPolicy::sample_joint_action(int s, Rng& rng) const {
  int joint = 0;
  for (int m = 0; m < num_agents(); ++m) {
    const Eigen::VectorXd dist = action_distribution(m, s);
    const int a = rng.categorical(std::span<const double>(dist.data(), static_cast<std::size_t>(dist.size())));
    joint += a * radix_[static_cast<std::size_t>(m)];
  }
  return joint;
}

int JointSoftmaxPolicy::agent_action(int joint_action, int m) const {
  const auto i = static_cast<std::size_t>(m);
  return (joint_action / radix_[i]) % action_counts_[i];
}

int JointSoftmaxPolicy::encode(std::span<const int> per_agent) const {
  require(per_agent.size() == action_counts_.size(), "encode: one action per agent");
  int joint = 0;
  for (std::size_t i = 0; i < per_agent.size(); ++i) {
    require(per_agent[i] >= 0 && per_agent[i] < action_counts_[i], "encode: action out of range");
    joint += per_agent[i] * radix_[i];
  }
  return joint;
}

Eigen::MatrixXd JointSoftmaxPolicy::local_score(int m, int s, int a_m) const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(num_states_, action_counts_[static_cast<std::size_t>(m)]);
  out.row(s) = -action_distribution(m, s).transpose();
  out(s, a_m) += 1.0;
  return out;
}

Eigen::VectorXd JointSoftmaxPolicy::joint_score(int s, int joint_action) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dim_);
  for (int m = 0; m < num_agents(); ++m) {
    const Eigen::VectorXd dist = action_distribution(m, s);
    const int a_m = agent_action(joint_action, m);
    for (int b = 0; b < dist.size(); ++b) {
      out(flat_index(m, s, b)) = (b == a_m ? 1.0 : 0.0) - dist(b);
    }
  }
  return out;
}

FeatureMap::FeatureMap(Eigen::MatrixXd table) : table_(std::move(table)) {
  require(table_.rows() >= 1 && table_.cols() >= 1, "feature table must be nonempty");
  for (Eigen::Index s = 0; s < table_.rows(); ++s) {
    require(table_.row(s).norm() <= 1.0 + 1e-12, "feature rows must have norm at most 1");
  }
}

FeatureMap build_identity_features(int num_states) {
  require(num_states >= 1, "identity features need at least one state");
  return FeatureMap(Eigen::MatrixXd::Identity(num_states, num_states));
}

}  // namespace dmarl::policy
