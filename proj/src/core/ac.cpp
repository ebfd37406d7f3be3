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

#include "dmarl/ac.hpp"

#include <string>

#include "dmarl/error.hpp"

namespace dmarl::ac {

void AcConfig::validate(int num_agents) const {
  require(alpha >= 0.0, "actor step size must be nonnegative");
  require(iterations >= 1, "iteration count must be positive");
  require(batch >= 1, "actor batch size must be positive");
  require(static_cast<int>(noise.sigmas.size()) == num_agents,
          "noise needs one sigma per agent");
  require(noise.rounds >= 0, "reward sharing rounds must be nonnegative");
  critic.validate();
}

long long AcConfig::rounds_per_iteration() const {
  const long long share = strict_rounds ? static_cast<long long>(batch) * noise.rounds : noise.rounds;
  return critic.t_c + critic.t_c_prime + share;
}

long long AcConfig::samples_per_iteration() const {
  return static_cast<long long>(critic.t_c) * critic.n_c + batch;
}

SharedBatch collect_shared_batch(const mdp::MultiAgentMdp& mdp, const gossip::MixingMatrix& w,
                                 const policy::JointSoftmaxPolicy& pi,
                                 const gossip::NoiseConfig& noise, mdp::ChainState& chain,
                                 Rng& noise_rng, int n) {
  SharedBatch out;
  out.batch = mdp::advance_chain(mdp, chain, pi, n, mdp::Kernel::kRestart);
  const int M = mdp.num_agents();
  Eigen::MatrixXd raw(M, n);
  for (int i = 0; i < n; ++i) {
    const auto& r = out.batch.records[static_cast<std::size_t>(i)];
    for (int m = 0; m < M; ++m) raw(m, i) = mdp.reward(m, r.state, r.joint_action, r.aux_next_state);
  }
  out.true_means = raw.colwise().mean().transpose();
  out.estimates = gossip::noisy_reward_estimates_batch(w, raw, noise, noise_rng);
  return out;
}

Eigen::MatrixXd local_policy_gradient_estimate(const mdp::TrajectoryBatch& batch,
                                               const Eigen::VectorXd& own_estimates,
                                               const Eigen::VectorXd& theta,
                                               const policy::JointSoftmaxPolicy& pi,
                                               const policy::FeatureMap& features, double gamma,
                                               int m) {
  require(batch.kernel == mdp::Kernel::kRestart,
          "policy gradient estimates need samples from the restart kernel");
  require(own_estimates.size() == static_cast<Eigen::Index>(batch.size()) && batch.size() > 0,
          "one reward estimate per batch record required");
  require(m >= 0 && m < pi.num_agents(), "agent index out of range");
  require(theta.size() == features.dim(), "critic dimension does not match the features");
  require(features.num_states() == pi.num_states(), "feature map does not match the policy");

  return local_policy_gradient_estimate(batch, own_estimates, features.table() * theta,
                                        pi.local_distribution(m), pi, gamma, m);
}

Eigen::MatrixXd local_policy_gradient_estimate(const mdp::TrajectoryBatch& batch,
                                               const Eigen::VectorXd& own_estimates,
                                               const Eigen::VectorXd& values,
                                               const Eigen::MatrixXd& dist,
                                               const policy::JointSoftmaxPolicy& pi, double gamma,
                                               int m) {
  require(batch.kernel == mdp::Kernel::kRestart,
          "policy gradient estimates need samples from the restart kernel");
  require(own_estimates.size() == static_cast<Eigen::Index>(batch.size()) && batch.size() > 0,
          "one reward estimate per batch record required");
  require(values.size() == dist.rows() && dist.rows() == pi.num_states(),
          "critic values and action table must cover every state");
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(dist.rows(), dist.cols());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& r = batch.records[i];
    const double delta = own_estimates(static_cast<Eigen::Index>(i)) +
                         gamma * values(r.aux_next_state) - values(r.state);
    grad.row(r.state) -= delta * dist.row(r.state);
    grad(r.state, pi.agent_action(r.joint_action, m)) += delta;
  }
  return grad / static_cast<double>(batch.size());
}

mdp::ChainState start_chain(const mdp::MultiAgentMdp& mdp, Rng rng) {
  const int s = rng.categorical(mdp.restart());
  return mdp::ChainState{s, std::move(rng)};
}

int pick_output_iterate(std::uint64_t seed, int completed) {
  if (completed < 1) return 0;
  Rng rng = Rng::derive(seed, kOutputIterate);
  return rng.uniform_int(1, completed);
}

metrics::RunResult run_ac(const mdp::MultiAgentMdp& mdp, const gossip::MixingMatrix& w,
                          const policy::FeatureMap& features, const AcConfig& cfg,
                          const policy::JointSoftmaxPolicy& initial,
                          const metrics::Recorder& recorder) {
  const int M = mdp.num_agents();
  cfg.validate(M);
  require(w.size() == M, "mixing matrix size must equal the number of agents");
  require(initial.num_states() == mdp.num_states() &&
              initial.action_counts() == mdp.action_counts(),
          "initial policy does not match the MDP");

  mdp::ChainState critic_chain = start_chain(mdp, Rng::derive(cfg.seed, kCriticChain));
  mdp::ChainState actor_chain = start_chain(mdp, Rng::derive(cfg.seed, kActorChain));
  Rng noise_rng = Rng::derive(cfg.seed, kRewardNoise);

  metrics::RunResult result;
  result.iterates.push_back(initial.flatten());
  policy::JointSoftmaxPolicy pi = initial;
  critic::CriticState critic_state;
  long long samples = 0;
  long long rounds = 0;

  for (int t = 1; t <= cfg.iterations; ++t) {
    critic_state = critic::run_decentralized_td(mdp, pi, w, features, cfg.critic, critic_chain,
                                                &critic_state);
    const SharedBatch shared =
        collect_shared_batch(mdp, w, pi, cfg.noise, actor_chain, noise_rng, cfg.batch);

    const Eigen::MatrixXd values = critic_state.thetas * features.table().transpose();  // M x S
    std::vector<Eigen::MatrixXd> next(static_cast<std::size_t>(M));
    for (int m = 0; m < M; ++m) {
      const Eigen::MatrixXd g = local_policy_gradient_estimate(
          shared.batch, shared.estimates.row(m).transpose(), values.row(m).transpose(),
          pi.local_distribution(m), pi, mdp.gamma(), m);
      next[static_cast<std::size_t>(m)] = pi.params(m) + cfg.alpha * g;
    }
    samples += cfg.samples_per_iteration();
    rounds += cfg.rounds_per_iteration();

    bool finite = true;
    for (const auto& p : next) finite = finite && p.allFinite();
    if (!finite) {
      metrics::mark_aborted(result, t, "non-finite actor parameters at iteration " + std::to_string(t));
      break;
    }

    metrics::RunRecord row;
    row.iter = t;
    row.samples = samples;
    row.comm_rounds = rounds;
    if (const auto target = recorder.td_target(pi)) {
      row.td_rel_err = metrics::relative_td_error(critic_state, *target);
    }
    row.reward_rel_err = metrics::relative_reward_error(shared.estimates, shared.true_means);
    pi = policy::JointSoftmaxPolicy(std::move(next));
    recorder.emit(result, row, pi);
  }
  result.output_iterate =
      pick_output_iterate(cfg.seed, static_cast<int>(result.records.size()));
  return result;
}

}  // namespace dmarl::ac
