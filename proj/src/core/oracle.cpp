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

#include "dmarl/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "dmarl/error.hpp"
#include "dmarl/text_io.hpp"

namespace dmarl::oracle {

namespace {

void check_match(const mdp::MultiAgentMdp& mdp, const policy::JointSoftmaxPolicy& pi) {
  require(pi.num_states() == mdp.num_states() && pi.action_counts() == mdp.action_counts(),
          "policy does not match the MDP");
}

// Per-state local layout of the joint score: agent m's entries for row s sit
// at [local_offset[m], local_offset[m] + A_m).
struct ScoreLayout {
  std::vector<int> local_offset;
  int width = 0;

  explicit ScoreLayout(const policy::JointSoftmaxPolicy& pi) {
    for (int a : pi.action_counts()) {
      local_offset.push_back(width);
      width += a;
    }
  }
};

// Nonzero entries of P, one list per (s, a). The cliff kernel is deterministic
// so this saves two orders of magnitude in value iteration.
struct SparseKernel {
  std::vector<std::vector<std::pair<int, double>>> rows;
};

SparseKernel sparsify(const mdp::MultiAgentMdp& mdp) {
  SparseKernel k;
  k.rows.resize(static_cast<std::size_t>(mdp.num_states()) * mdp.num_joint_actions());
  for (int s = 0; s < mdp.num_states(); ++s) {
    for (int a = 0; a < mdp.num_joint_actions(); ++a) {
      auto& row = k.rows[static_cast<std::size_t>(s) * mdp.num_joint_actions() + a];
      const auto p = mdp.transition_row(s, a);
      for (int n = 0; n < mdp.num_states(); ++n) {
        if (p[static_cast<std::size_t>(n)] != 0.0) row.emplace_back(n, p[static_cast<std::size_t>(n)]);
      }
    }
  }
  return k;
}

}  // namespace

Eigen::MatrixXd state_kernel(const mdp::MultiAgentMdp& mdp, const policy::JointSoftmaxPolicy& pi,
                             mdp::Kernel kernel) {
  check_match(mdp, pi);
  const int S = mdp.num_states();
  const Eigen::MatrixXd joint = pi.joint_distribution();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(S, S);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < mdp.num_joint_actions(); ++a) {
      const double w = joint(s, a);
      const auto row = mdp.transition_row(s, a);
      for (int n = 0; n < S; ++n) out(s, n) += w * row[static_cast<std::size_t>(n)];
    }
  }
  if (kernel == mdp::Kernel::kRestart) {
    const double g = mdp.gamma();
    out *= g;
    for (int n = 0; n < S; ++n) out.col(n).array() += (1.0 - g) * mdp.restart()[static_cast<std::size_t>(n)];
  }
  return out;
}

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& kernel) {
  const Eigen::Index S = kernel.rows();
  require(S >= 1 && kernel.cols() == S, "stationary_distribution: kernel must be square");
  // mu^T (K - I) = 0 with one balance equation replaced by sum(mu) = 1. The
  // system is nonsingular exactly when the unit eigenvalue is simple.
  Eigen::MatrixXd a = (kernel - Eigen::MatrixXd::Identity(S, S)).transpose();
  a.row(S - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(S);
  rhs(S - 1) = 1.0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  lu.setThreshold(1e-10);
  if (!lu.isInvertible()) fail(ErrorKind::kNumeric, "chain not irreducible: stationary distribution is not unique");
  Eigen::VectorXd mu = lu.solve(rhs);
  for (Eigen::Index i = 0; i < S; ++i) {
    if (mu(i) < -1e-9) fail(ErrorKind::kNumeric, "chain not irreducible: negative stationary mass");
    mu(i) = std::max(mu(i), 0.0);
  }
  return mu / mu.sum();
}

Stationary stationary_distributions(const mdp::MultiAgentMdp& mdp,
                                    const policy::JointSoftmaxPolicy& pi) {
  return {stationary_distribution(state_kernel(mdp, pi, mdp::Kernel::kTrue)),
          discounted_visitation(mdp, pi)};
}

Eigen::VectorXd discounted_visitation(const mdp::MultiAgentMdp& mdp,
                                      const policy::JointSoftmaxPolicy& pi) {
  // P_xi restarts with probability 1 - gamma, so the system below is always
  // nonsingular and partial pivoting suffices.
  const Eigen::MatrixXd k = state_kernel(mdp, pi, mdp::Kernel::kRestart);
  const Eigen::Index S = k.rows();
  Eigen::MatrixXd a = (k - Eigen::MatrixXd::Identity(S, S)).transpose();
  a.row(S - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(S);
  rhs(S - 1) = 1.0;
  Eigen::VectorXd nu = Eigen::PartialPivLU<Eigen::MatrixXd>(a).solve(rhs).cwiseMax(0.0);
  return nu / nu.sum();
}

Values value_advantage_objective(const mdp::MultiAgentMdp& mdp,
                                 const policy::JointSoftmaxPolicy& pi) {
  check_match(mdp, pi);
  const int S = mdp.num_states();
  const int A = mdp.num_joint_actions();
  const double g = mdp.gamma();
  const Eigen::MatrixXd joint = pi.joint_distribution();
  const Eigen::MatrixXd r = mdp.expected_mean_reward();
  const Eigen::MatrixXd p_pi = state_kernel(mdp, pi, mdp::Kernel::kTrue);
  const Eigen::VectorXd r_pi = joint.cwiseProduct(r).rowwise().sum();

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd::Identity(S, S) - g * p_pi);
  Values out;
  out.v = lu.solve(r_pi);
  if (!out.v.allFinite()) fail(ErrorKind::kNumeric, "policy evaluation: singular linear system");
  out.q.resize(S, A);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      const auto row = mdp.transition_row(s, a);
      double ev = 0.0;
      for (int n = 0; n < S; ++n) ev += row[static_cast<std::size_t>(n)] * out.v(n);
      out.q(s, a) = r(s, a) + g * ev;
    }
  }
  out.advantage = out.q.colwise() - out.v;
  const Eigen::Map<const Eigen::VectorXd> xi(mdp.restart().data(), S);
  out.j = (1.0 - g) * xi.dot(out.v);
  return out;
}

double objective(const mdp::MultiAgentMdp& mdp, const policy::JointSoftmaxPolicy& pi) {
  check_match(mdp, pi);
  const int S = mdp.num_states();
  const double g = mdp.gamma();
  const Eigen::MatrixXd joint = pi.joint_distribution();
  const Eigen::VectorXd r_pi = joint.cwiseProduct(mdp.expected_mean_reward()).rowwise().sum();
  const Eigen::MatrixXd p_pi = state_kernel(mdp, pi, mdp::Kernel::kTrue);
  const Eigen::VectorXd v =
      Eigen::PartialPivLU<Eigen::MatrixXd>(Eigen::MatrixXd::Identity(S, S) - g * p_pi).solve(r_pi);
  const Eigen::Map<const Eigen::VectorXd> xi(mdp.restart().data(), S);
  return (1.0 - g) * xi.dot(v);
}

Eigen::VectorXd exact_policy_gradient(const mdp::MultiAgentMdp& mdp,
                                      const policy::JointSoftmaxPolicy& pi) {
  return objective_and_gradient(mdp, pi).grad;
}

ObjectiveGradient objective_and_gradient(const mdp::MultiAgentMdp& mdp,
                                         const policy::JointSoftmaxPolicy& pi) {
  const Values values = value_advantage_objective(mdp, pi);
  const Eigen::VectorXd nu = discounted_visitation(mdp, pi);
  const Eigen::MatrixXd joint = pi.joint_distribution();
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(pi.dim());
  for (int s = 0; s < mdp.num_states(); ++s) {
    std::vector<Eigen::VectorXd> local;
    for (int m = 0; m < pi.num_agents(); ++m) local.push_back(pi.action_distribution(m, s));
    for (int a = 0; a < mdp.num_joint_actions(); ++a) {
      const double coef = nu(s) * joint(s, a) * values.advantage(s, a);
      if (coef == 0.0) continue;
      for (int m = 0; m < pi.num_agents(); ++m) {
        const int a_m = pi.agent_action(a, m);
        const auto& dist = local[static_cast<std::size_t>(m)];
        for (int b = 0; b < dist.size(); ++b) {
          grad(pi.flat_index(m, s, b)) += coef * ((b == a_m ? 1.0 : 0.0) - dist(b));
        }
      }
    }
  }
  return {values.j, std::move(grad)};
}

TdLimit td_limit(const mdp::MultiAgentMdp& mdp, const policy::JointSoftmaxPolicy& pi,
                 const policy::FeatureMap& features) {
  check_match(mdp, pi);
  require(features.num_states() == mdp.num_states(), "feature map does not match the MDP");
  const Eigen::MatrixXd p_pi = state_kernel(mdp, pi, mdp::Kernel::kTrue);
  const Eigen::VectorXd mu = stationary_distribution(p_pi);
  const Eigen::MatrixXd joint = pi.joint_distribution();
  const Eigen::VectorXd r_pi = joint.cwiseProduct(mdp.expected_mean_reward()).rowwise().sum();
  const Eigen::MatrixXd& phi = features.table();
  const Eigen::MatrixXd weighted = phi.transpose() * mu.asDiagonal();

  TdLimit out;
  out.b_matrix = weighted * (mdp.gamma() * p_pi * phi - phi);
  out.b_vector = weighted * r_pi;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(out.b_matrix);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) fail(ErrorKind::kNumeric, "TD limit: B matrix is singular");
  out.theta_star = lu.solve(-out.b_vector);
  return out;
}

namespace {

// F restricted to the scores of state s, in ScoreLayout coordinates.
Eigen::MatrixXd fisher_state_block(const policy::JointSoftmaxPolicy& pi, const ScoreLayout& layout,
                                   const Eigen::MatrixXd& joint, int s, double weight) {
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(layout.width, layout.width);
  if (weight == 0.0) return block;
  std::vector<Eigen::VectorXd> local;
  for (int m = 0; m < pi.num_agents(); ++m) local.push_back(pi.action_distribution(m, s));
  Eigen::VectorXd g(layout.width);
  for (int a = 0; a < joint.cols(); ++a) {
    const double w = weight * joint(s, a);
    if (w == 0.0) continue;
    for (int m = 0; m < pi.num_agents(); ++m) {
      const int a_m = pi.agent_action(a, m);
      const auto& dist = local[static_cast<std::size_t>(m)];
      for (int b = 0; b < dist.size(); ++b) {
        g(layout.local_offset[static_cast<std::size_t>(m)] + b) = (b == a_m ? 1.0 : 0.0) - dist(b);
      }
    }
    block.noalias() += w * g * g.transpose();
  }
  return block;
}

int global_index(const policy::JointSoftmaxPolicy& pi, const ScoreLayout& layout, int s, int local) {
  int m = 0;
  while (m + 1 < pi.num_agents() && layout.local_offset[static_cast<std::size_t>(m + 1)] <= local) ++m;
  return pi.flat_index(m, s, local - layout.local_offset[static_cast<std::size_t>(m)]);
}

}  // namespace

Eigen::MatrixXd fisher_information(const mdp::MultiAgentMdp& mdp,
                                   const policy::JointSoftmaxPolicy& pi) {
  check_match(mdp, pi);
  const Eigen::VectorXd nu = discounted_visitation(mdp, pi);
  const Eigen::MatrixXd joint = pi.joint_distribution();
  const ScoreLayout layout(pi);
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(pi.dim(), pi.dim());
  for (int s = 0; s < mdp.num_states(); ++s) {
    const Eigen::MatrixXd block = fisher_state_block(pi, layout, joint, s, nu(s));
    for (int i = 0; i < layout.width; ++i) {
      for (int j = 0; j < layout.width; ++j) {
        f(global_index(pi, layout, s, i), global_index(pi, layout, s, j)) = block(i, j);
      }
    }
  }
  return f;
}

NaturalGradient fisher_and_natural_gradient(const mdp::MultiAgentMdp& mdp,
                                            const policy::JointSoftmaxPolicy& pi, double ridge) {
  require(ridge >= 0.0, "Fisher ridge must be nonnegative");
  check_match(mdp, pi);
  const Eigen::VectorXd grad = exact_policy_gradient(mdp, pi);
  const Eigen::VectorXd nu = discounted_visitation(mdp, pi);
  const Eigen::MatrixXd joint = pi.joint_distribution();
  const ScoreLayout layout(pi);

  NaturalGradient out;
  out.fisher = Eigen::MatrixXd::Zero(pi.dim(), pi.dim());
  out.nat_grad = Eigen::VectorXd::Zero(pi.dim());
  out.lambda_f_effective = std::numeric_limits<double>::infinity();
  double lambda_max = 0.0;

  // Scores at state s vanish outside row s, so F is block diagonal over
  // states and every solve happens per block.
  std::vector<Eigen::MatrixXd> blocks;
  for (int s = 0; s < mdp.num_states(); ++s) {
    Eigen::MatrixXd block = fisher_state_block(pi, layout, joint, s, nu(s));
    for (int i = 0; i < layout.width; ++i) {
      for (int j = 0; j < layout.width; ++j) {
        out.fisher(global_index(pi, layout, s, i), global_index(pi, layout, s, j)) = block(i, j);
      }
    }
    block.diagonal().array() += ridge;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(block, Eigen::EigenvaluesOnly);
    out.lambda_f_effective = std::min(out.lambda_f_effective, eig.eigenvalues().minCoeff());
    lambda_max = std::max(lambda_max, eig.eigenvalues().maxCoeff());
    blocks.push_back(std::move(block));
  }
  if (out.lambda_f_effective <= 1e-12 * std::max(1.0, lambda_max)) {
    fail(ErrorKind::kNumeric, "Fisher matrix (plus ridge) is singular; use a positive ridge");
  }
  for (int s = 0; s < mdp.num_states(); ++s) {
    Eigen::VectorXd rhs(layout.width);
    for (int i = 0; i < layout.width; ++i) rhs(i) = grad(global_index(pi, layout, s, i));
    const Eigen::VectorXd h = blocks[static_cast<std::size_t>(s)].ldlt().solve(rhs);
    for (int i = 0; i < layout.width; ++i) out.nat_grad(global_index(pi, layout, s, i)) = h(i);
  }
  return out;
}

OptimalValue optimal_joint_value(const mdp::MultiAgentMdp& mdp, double tolerance) {
  require(tolerance > 0.0, "value iteration tolerance must be positive");
  const int S = mdp.num_states();
  const int A = mdp.num_joint_actions();
  const double g = mdp.gamma();
  const SparseKernel kernel = sparsify(mdp);
  const Eigen::MatrixXd r = mdp.expected_mean_reward();
  const double stop = tolerance * (1.0 - g) / g;

  OptimalValue out;
  out.v_star = Eigen::VectorXd::Zero(S);
  out.greedy.assign(static_cast<std::size_t>(S), 0);
  Eigen::VectorXd next(S);
  constexpr int kMaxSweeps = 10'000'000;
  for (out.sweeps = 1; out.sweeps <= kMaxSweeps; ++out.sweeps) {
    double residual = 0.0;
    for (int s = 0; s < S; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      int arg = 0;
      for (int a = 0; a < A; ++a) {
        double q = r(s, a);
        for (const auto& [n, p] : kernel.rows[static_cast<std::size_t>(s) * A + a]) q += g * p * out.v_star(n);
        if (q > best) {
          best = q;
          arg = a;
        }
      }
      next(s) = best;
      out.greedy[static_cast<std::size_t>(s)] = arg;
      residual = std::max(residual, std::abs(best - out.v_star(s)));
    }
    out.v_star.swap(next);
    if (residual < stop) break;
  }
  const Eigen::Map<const Eigen::VectorXd> xi(mdp.restart().data(), S);
  out.j_star = (1.0 - g) * xi.dot(out.v_star);
  return out;
}

ExactQuantities compute_exact_quantities(const mdp::MultiAgentMdp& mdp,
                                         const policy::JointSoftmaxPolicy& pi,
                                         const policy::FeatureMap& features, double ridge) {
  ExactQuantities q;
  q.ridge = ridge;
  try {
    q.mu = stationary_distribution(state_kernel(mdp, pi, mdp::Kernel::kTrue));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kNumeric) throw;
  }
  q.nu = discounted_visitation(mdp, pi);
  q.values = value_advantage_objective(mdp, pi);
  q.grad_j = exact_policy_gradient(mdp, pi);
  if (q.mu) {
    try {
      q.theta_star = td_limit(mdp, pi, features).theta_star;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kNumeric) throw;
    }
  }
  q.natural = fisher_and_natural_gradient(mdp, pi, ridge);
  return q;
}

void write_exact_quantities(const ExactQuantities& q, std::ostream& out) {
  out << "dmarl-oracle 1\n";
  out << "j " << text::format_double(q.values.j) << '\n';
  out << "grad_norm_sq " << text::format_double(q.grad_j.squaredNorm()) << '\n';
  out << "ridge " << text::format_double(q.ridge) << '\n';
  out << "lambda_f_effective " << text::format_double(q.natural.lambda_f_effective) << '\n';
  if (q.mu) text::write_matrix(out, "mu", q.mu->transpose());
  else out << "mu unavailable\n";
  text::write_matrix(out, "nu", q.nu.transpose());
  text::write_matrix(out, "v", q.values.v.transpose());
  text::write_matrix(out, "q", q.values.q);
  text::write_matrix(out, "advantage", q.values.advantage);
  text::write_matrix(out, "grad_j", q.grad_j.transpose());
  if (q.theta_star) text::write_matrix(out, "theta_star", q.theta_star->transpose());
  else out << "theta_star unavailable\n";
  text::write_matrix(out, "fisher", q.natural.fisher);
  text::write_matrix(out, "nat_grad", q.natural.nat_grad.transpose());
}

}  // namespace dmarl::oracle
