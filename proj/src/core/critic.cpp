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

#include "dmarl/critic.hpp"

#include "dmarl/error.hpp"

namespace dmarl::critic {

void CriticConfig::validate() const {
  require(beta > 0.0, "critic step size must be positive");
  require(t_c >= 1 && n_c >= 1, "critic iteration and batch counts must be positive");
  require(t_c_prime >= 0, "critic terminal rounds must be nonnegative");
}

MinibatchStats minibatch_statistics(std::span<const mdp::Transition> records,
                                    const policy::FeatureMap& features,
                                    const mdp::MultiAgentMdp& mdp) {
  require(!records.empty(), "minibatch statistics need a nonempty batch");
  require(features.num_states() == mdp.num_states(), "feature map does not match the MDP");
  const int d = features.dim();
  const int M = mdp.num_agents();
  const double g = mdp.gamma();
  MinibatchStats out{Eigen::MatrixXd::Zero(d, d), Eigen::MatrixXd::Zero(M, d)};
  for (const auto& r : records) {
    const Eigen::VectorXd phi = features.row(r.state).transpose();
    const Eigen::VectorXd phi_next = features.row(r.next_state).transpose();
    out.b_matrix.noalias() += phi * (g * phi_next - phi).transpose();
    for (int m = 0; m < M; ++m) {
      out.b_vectors.row(m) += mdp.reward(m, r.state, r.joint_action, r.next_state) * phi.transpose();
    }
  }
  const double inv = 1.0 / static_cast<double>(records.size());
  out.b_matrix *= inv;
  out.b_vectors *= inv;
  return out;
}

MinibatchStats minibatch_statistics(const mdp::TrajectoryBatch& batch,
                                    const policy::FeatureMap& features,
                                    const mdp::MultiAgentMdp& mdp) {
  require(batch.kernel == mdp::Kernel::kTrue, "TD statistics need samples from the true kernel");
  return minibatch_statistics(std::span<const mdp::Transition>(batch.records), features, mdp);
}

CriticState run_decentralized_td(const mdp::MultiAgentMdp& mdp,
                                 const policy::JointSoftmaxPolicy& pi,
                                 const gossip::MixingMatrix& w,
                                 const policy::FeatureMap& features, const CriticConfig& cfg,
                                 mdp::ChainState& chain, const CriticState* previous,
                                 const TdObserver& observer) {
  cfg.validate();
  const int M = mdp.num_agents();
  const int d = features.dim();
  require(w.size() == M, "mixing matrix size must equal the number of agents");
  require(features.num_states() == mdp.num_states(), "feature map does not match the MDP");

  CriticState state;
  if (cfg.warm_start && previous != nullptr && previous->thetas.size() > 0) {
    require(previous->thetas.rows() == M && previous->thetas.cols() == d,
            "warm-start critic has the wrong shape");
    state = *previous;
  } else {
    Eigen::VectorXd init = cfg.theta_init.size() ? cfg.theta_init : Eigen::VectorXd::Zero(d);
    require(init.size() == d, "critic initial vector must match the feature dimension");
    state.thetas = init.transpose().replicate(M, 1);
  }

  const Eigen::MatrixXd& phi = features.table();
  const double g = mdp.gamma();
  for (int t = 0; t < cfg.t_c; ++t) {
    const mdp::TrajectoryBatch batch = mdp::advance_chain(mdp, chain, pi, cfg.n_c, mdp::Kernel::kTrue);
    if (!observer) {
      // Theta B^T + b without forming the d x d matrix B.
      Eigen::MatrixXd drift = Eigen::MatrixXd::Zero(M, d);
      for (const auto& r : batch.records) {
        const Eigen::RowVectorXd diff = g * phi.row(r.next_state) - phi.row(r.state);
        const Eigen::VectorXd c = state.thetas * diff.transpose();
        for (int m = 0; m < M; ++m) {
          drift.row(m) += (c(m) + mdp.reward(m, r.state, r.joint_action, r.next_state)) * phi.row(r.state);
        }
      }
      state.thetas = w.weights() * state.thetas + (cfg.beta / cfg.n_c) * drift;
      continue;
    }
    const MinibatchStats stats = minibatch_statistics(batch, features, mdp);
    // Matrix form: Theta <- W Theta + beta (Theta B^T + [b^(1); ...; b^(M)]).
    Eigen::MatrixXd next = w.weights() * state.thetas +
                           cfg.beta * (state.thetas * stats.b_matrix.transpose() + stats.b_vectors);
    observer(TdStep{t, stats, state.thetas, next});
    state.thetas = std::move(next);
  }
  state.thetas = gossip::gossip_rounds(w, state.thetas, cfg.t_c_prime);
  return state;
}

}  // namespace dmarl::critic
