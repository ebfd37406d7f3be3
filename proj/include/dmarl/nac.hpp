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

#include "dmarl/ac.hpp"

namespace dmarl::nac {

enum class ScheduleMode { kGeometric, kConstant };

struct NacConfig {
  ac::AcConfig base;  // alpha, T, N (total per iteration), noise/T', critic, seed, accounting
  double eta = 0.04;
  int k_steps = 50;
  int t_z = 5;
  double lambda_f = 0.0;  // used by the geometric schedule only
  ScheduleMode mode = ScheduleMode::kConstant;
  Eigen::VectorXd h_init;  // flattened like the policy; empty means zero
  /// Test hook: replace the stochastic inner gradient by the exact
  /// (F + ridge I) h - grad J.
  bool surrogate = false;
  double surrogate_ridge = 1e-3;

  void validate(int num_agents) const;
  std::vector<int> schedule() const;
  long long rounds_per_iteration() const;
  long long samples_per_iteration() const;
};

/// Real-valued N_k = N q^{(K-1-k)/2} (1 - sqrt q) / (1 - q^{K/2}) with
/// q = 1 - eta lambda_f / 2.
std::vector<double> geometric_schedule_real(int n_total, int k_steps, double eta, double lambda_f);

/// Integer schedule summing exactly to n_total with every entry >= 1.
/// Geometric mode rounds by largest remainder (ties favour later steps);
/// constant mode requires n_total divisible by k_steps.
std::vector<int> batch_schedule(int n_total, int k_steps, double eta, double lambda_f,
                                ScheduleMode mode);

/// Per-record consensus on psi^(m)(a_i^(m)|s_i)^T h^(m): t_z gossip rounds on
/// the M x N matrix of local products, then scaled by M. Entry (m, i) is
/// agent m's estimate of psi(a_i|s_i)^T h.
Eigen::MatrixXd z_consensus(const gossip::MixingMatrix& w, const policy::JointSoftmaxPolicy& pi,
                            const std::vector<Eigen::MatrixXd>& h,
                            std::span<const mdp::Transition> records, int t_z);

/// Agent m's inner-loop gradient (1/N) sum_i psi^(m)_i z(m, i) - grad_J_m.
Eigen::MatrixXd local_quadratic_gradient(const policy::JointSoftmaxPolicy& pi,
                                         std::span<const mdp::Transition> records,
                                         const Eigen::MatrixXd& z, const Eigen::MatrixXd& grad_j,
                                         int m);

/// Gradient descent on f(h) = h^T A h / 2 - g^T h for k steps. Returns
/// h_0, ..., h_k.
std::vector<Eigen::VectorXd> surrogate_descent(const Eigen::MatrixXd& a, const Eigen::VectorXd& g,
                                               const Eigen::VectorXd& h0, double eta, int k);

metrics::RunResult run_nac(const mdp::MultiAgentMdp& mdp, const gossip::MixingMatrix& w,
                           const policy::FeatureMap& features, const NacConfig& cfg,
                           const policy::JointSoftmaxPolicy& initial,
                           const metrics::Recorder& recorder);

}  // namespace dmarl::nac
