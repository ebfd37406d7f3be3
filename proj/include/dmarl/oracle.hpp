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

#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "dmarl/mdp.hpp"
#include "dmarl/policy.hpp"

namespace dmarl::oracle {

// Exact (linear-algebra) counterparts of everything the sample-based
// algorithms estimate. Dense solves throughout; sizes are at most a few
// hundred states.

/// State-to-state kernel under the policy: sum_a pi(a|s) K(s'|s,a), with K
/// either P or P_xi.
Eigen::MatrixXd state_kernel(const mdp::MultiAgentMdp& mdp, const policy::JointSoftmaxPolicy& pi,
                             mdp::Kernel kernel);

/// Unique stationary distribution of a row-stochastic matrix. Throws
/// ErrorKind::kNumeric ("chain not irreducible") if the solution is not unique.
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& kernel);

struct Stationary {
  Eigen::VectorXd mu;  // under P
  Eigen::VectorXd nu;  // under P_xi
};
Stationary stationary_distributions(const mdp::MultiAgentMdp& mdp,
                                    const policy::JointSoftmaxPolicy& pi);

/// nu alone; always well defined because P_xi restarts.
Eigen::VectorXd discounted_visitation(const mdp::MultiAgentMdp& mdp,
                                      const policy::JointSoftmaxPolicy& pi);

struct Values {
  Eigen::VectorXd v;          // |S|
  Eigen::MatrixXd q;          // |S| x |A|
  Eigen::MatrixXd advantage;  // q - v
  double j = 0.0;             // (1 - gamma) xi^T v
};
Values value_advantage_objective(const mdp::MultiAgentMdp& mdp,
                                 const policy::JointSoftmaxPolicy& pi);

double objective(const mdp::MultiAgentMdp& mdp, const policy::JointSoftmaxPolicy& pi);

struct ObjectiveGradient {
  double j = 0.0;
  Eigen::VectorXd grad;
};
/// J and grad J from a single policy evaluation.
ObjectiveGradient objective_and_gradient(const mdp::MultiAgentMdp& mdp,
                                         const policy::JointSoftmaxPolicy& pi);

/// Policy gradient sum_s nu(s) sum_a pi(a|s) A(s,a) psi(a|s), flattened like
/// JointSoftmaxPolicy::flatten().
Eigen::VectorXd exact_policy_gradient(const mdp::MultiAgentMdp& mdp,
                                      const policy::JointSoftmaxPolicy& pi);

struct TdLimit {
  Eigen::MatrixXd b_matrix;  // E[phi(s) (gamma phi(s') - phi(s))^T] under mu
  Eigen::VectorXd b_vector;  // E[mean reward * phi(s)]
  Eigen::VectorXd theta_star;
};

/// Fixed point of the TD update: theta* solving B theta + b = 0.
/// Throws kNumeric if mu is not unique or B is singular.
TdLimit td_limit(const mdp::MultiAgentMdp& mdp, const policy::JointSoftmaxPolicy& pi,
                 const policy::FeatureMap& features);

struct NaturalGradient {
  Eigen::MatrixXd fisher;
  double lambda_f_effective = 0.0;  // lambda_min(F + ridge I)
  Eigen::VectorXd nat_grad;         // (F + ridge I)^{-1} grad J
};

Eigen::MatrixXd fisher_information(const mdp::MultiAgentMdp& mdp,
                                   const policy::JointSoftmaxPolicy& pi);

/// Throws kNumeric when F + ridge I is singular (always the case for
/// ridge = 0 with softmax policies).
NaturalGradient fisher_and_natural_gradient(const mdp::MultiAgentMdp& mdp,
                                            const policy::JointSoftmaxPolicy& pi, double ridge);

struct OptimalValue {
  double j_star = 0.0;
  Eigen::VectorXd v_star;
  std::vector<int> greedy;  // joint action per state
  int sweeps = 0;
};

/// Value iteration over joint actions; stops once the sup-norm Bellman
/// residual drops below tolerance (1 - gamma) / gamma.
OptimalValue optimal_joint_value(const mdp::MultiAgentMdp& mdp, double tolerance);

struct ExactQuantities {
  std::optional<Eigen::VectorXd> mu;  // absent when P under pi has no unique stationary law
  Eigen::VectorXd nu;
  Values values;
  Eigen::VectorXd grad_j;
  std::optional<Eigen::VectorXd> theta_star;
  NaturalGradient natural;
  double ridge = 0.0;
};

ExactQuantities compute_exact_quantities(const mdp::MultiAgentMdp& mdp,
                                         const policy::JointSoftmaxPolicy& pi,
                                         const policy::FeatureMap& features, double ridge);

void write_exact_quantities(const ExactQuantities& q, std::ostream& out);

}  // namespace dmarl::oracle
