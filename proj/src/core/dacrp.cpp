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

#include "dmarl/dacrp.hpp"

#include <cmath>
#include <string>

#include "dmarl/ac.hpp"
#include "dmarl/critic.hpp"
#include "dmarl/error.hpp"

namespace dmarl::dacrp {

RewardFeatures RewardFeatures::identity_triplets(const mdp::MultiAgentMdp& mdp, long long cap) {
  const long long S = mdp.num_states();
  const long long A = mdp.num_joint_actions();
  const long long d = S * S * A;
  if (d > cap) {
    fail(ErrorKind::kInvalidArgument,
         "identity triplet reward features need " + std::to_string(d) +
             " dimensions, above the cap of " + std::to_string(cap));
  }
  RewardFeatures f;
  f.num_states_ = static_cast<int>(S);
  f.num_joint_ = static_cast<int>(A);
  f.dim_ = static_cast<int>(d);
  f.slots_.resize(static_cast<std::size_t>(d));
  for (int i = 0; i < f.dim_; ++i) f.slots_[static_cast<std::size_t>(i)] = i;
  return f;
}

Eigen::VectorXd RewardFeatures::dense(int s, int a, int next) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dim_);
  v(slot(s, a, next)) = 1.0;
  return v;
}

double StepSchedule::at(int t) const { return scale * std::pow(t + 1.0, -power); }

DacRpConfig DacRpConfig::rp1() { return DacRpConfig{}; }

DacRpConfig DacRpConfig::rp100() {
  DacRpConfig c;
  c.actor_batch = 100;
  c.critic_batch = 10;
  c.beta_v = {0.5, 0.0};
  c.beta_theta = {10.0, 0.0};
  return c;
}

void DacRpConfig::validate() const {
  require(iterations >= 1, "iteration count must be positive");
  require(actor_batch >= 1 && critic_batch >= 1, "batch sizes must be positive");
  require(beta_v.scale > 0.0 && beta_theta.scale >= 0.0, "step scales must be positive");
  require(beta_v.power >= 0.0 && beta_theta.power >= 0.0, "step decay powers must be nonnegative");
}

namespace {

Eigen::MatrixXd average_reward_table(const mdp::MultiAgentMdp& mdp) {
  const int S = mdp.num_states();
  const int A = mdp.num_joint_actions();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(S) * A, S);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a)
      for (int n = 0; n < S; ++n) out(s * A + a, n) = mdp.mean_reward(s, a, n);
  return out;
}

}  // namespace

Eigen::VectorXd exact_reward_fit(const mdp::MultiAgentMdp& mdp, const RewardFeatures& f) {
  const Eigen::MatrixXd rbar = average_reward_table(mdp);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(f.dim());
  Eigen::VectorXd count = Eigen::VectorXd::Zero(f.dim());
  const int S = mdp.num_states();
  const int A = mdp.num_joint_actions();
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a)
      for (int n = 0; n < S; ++n) {
        const int j = f.slot(s, a, n);
        sum(j) += rbar(s * A + a, n);
        count(j) += 1.0;
      }
  return (count.array() > 0.0).select(sum.array() / count.array().max(1.0), 0.0).matrix();
}

double reward_model_error(const mdp::MultiAgentMdp& mdp, const RewardFeatures& f,
                          const RewardModel& lambda) {
  require(lambda.cols() == f.dim() && lambda.rows() == mdp.num_agents(),
          "reward model must have one row per agent and one column per feature");
  const Eigen::MatrixXd rbar = average_reward_table(mdp);
  const int S = mdp.num_states();
  const int A = mdp.num_joint_actions();
  double a_sum = 0.0;
  double b_sum = 0.0;
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a)
      for (int n = 0; n < S; ++n) {
        const double r = rbar(s * A + a, n);
        b_sum += r * r;
        const int j = f.slot(s, a, n);
        for (int m = 0; m < lambda.rows(); ++m) {
          const double e = r - lambda(m, j);
          a_sum += e * e;
        }
      }
  require(b_sum > 0.0, "reward model error undefined for an all-zero average reward");
  return a_sum / static_cast<double>(lambda.rows()) / b_sum;
}

metrics::RunResult run_dacrp(const mdp::MultiAgentMdp& mdp, const gossip::MixingMatrix& w,
                             const policy::FeatureMap& features, const RewardFeatures& reward_features,
                             const DacRpConfig& cfg, const policy::JointSoftmaxPolicy& initial,
                             const metrics::Recorder& recorder) {
  cfg.validate();
  const int M = mdp.num_agents();
  const int S = mdp.num_states();
  const int d = features.dim();
  const double g = mdp.gamma();
  require(w.size() == M, "mixing matrix size must equal the number of agents");
  require(features.num_states() == S, "feature map does not match the MDP");
  require(reward_features.dim() == static_cast<int>(static_cast<long long>(S) * S * mdp.num_joint_actions()),
          "reward features do not match the MDP");
  require(initial.num_states() == S && initial.action_counts() == mdp.action_counts(),
          "initial policy does not match the MDP");

  mdp::ChainState critic_chain = ac::start_chain(mdp, Rng::derive(cfg.seed, ac::kCriticChain));
  mdp::ChainState actor_chain = ac::start_chain(mdp, Rng::derive(cfg.seed, ac::kActorChain));

  metrics::RunResult result;
  result.iterates.push_back(initial.flatten());
  policy::JointSoftmaxPolicy pi = initial;
  critic::CriticState v{Eigen::MatrixXd::Zero(M, d)};
  RewardModel lambda = RewardModel::Zero(M, reward_features.dim());
  Eigen::VectorXd exact;
  if (cfg.exact_reward) exact = exact_reward_fit(mdp, reward_features);
  const Eigen::MatrixXd& phi = features.table();
  long long samples = 0;
  long long rounds = 0;

  for (int t = 1; t <= cfg.iterations; ++t) {
    const double bv = cfg.beta_v.at(t - 1);
    const double bt = cfg.beta_theta.at(t - 1);

    // Local critic and reward-model steps on the true-kernel chain.
    const mdp::TrajectoryBatch cb =
        mdp::advance_chain(mdp, critic_chain, pi, cfg.critic_batch, mdp::Kernel::kTrue);
    Eigen::MatrixXd v_step = Eigen::MatrixXd::Zero(M, d);
    Eigen::MatrixXd lambda_local = lambda;
    const double inv_c = 1.0 / cfg.critic_batch;
    for (const auto& r : cb.records) {
      const int slot = reward_features.slot(r.state, r.joint_action, r.next_state);
      for (int m = 0; m < M; ++m) {
        const double own = mdp.reward(m, r.state, r.joint_action, r.next_state);
        const double delta = own + g * phi.row(r.next_state).dot(v.thetas.row(m)) -
                             phi.row(r.state).dot(v.thetas.row(m));
        v_step.row(m) += inv_c * delta * phi.row(r.state);
        lambda_local(m, slot) += bv * inv_c * (own - lambda(m, slot));
      }
    }
    if (cfg.exact_reward) lambda_local = exact.transpose().replicate(M, 1);

    // Actor step from the pre-update critic and reward model.
    const mdp::TrajectoryBatch ab =
        mdp::advance_chain(mdp, actor_chain, pi, cfg.actor_batch, mdp::Kernel::kRestart);
    const RewardModel& model = cfg.exact_reward ? lambda_local : lambda;
    std::vector<Eigen::MatrixXd> next(static_cast<std::size_t>(M));
    bool finite = true;
    for (int m = 0; m < M; ++m) {
      Eigen::VectorXd est(static_cast<Eigen::Index>(ab.size()));
      for (std::size_t i = 0; i < ab.size(); ++i) {
        const auto& r = ab.records[i];
        est(static_cast<Eigen::Index>(i)) =
            model(m, reward_features.slot(r.state, r.joint_action, r.aux_next_state));
      }
      const Eigen::MatrixXd grad = ac::local_policy_gradient_estimate(
          ab, est, v.theta(m), pi, features, g, m);
      next[static_cast<std::size_t>(m)] = pi.params(m) + bt * grad;
      finite = finite && next[static_cast<std::size_t>(m)].allFinite();
    }

    // One gossip round each on v and lambda.
    critic::CriticState v_next{w.weights() * (v.thetas + bv * v_step)};
    lambda = w.weights() * lambda_local;
    samples += cfg.critic_batch + cfg.actor_batch;
    rounds += 2;
    finite = finite && v_next.thetas.allFinite() && lambda.allFinite();
    if (!finite) {
      metrics::mark_aborted(result, t, "non-finite parameters at iteration " + std::to_string(t));
      break;
    }

    metrics::RunRecord row;
    row.iter = t;
    row.samples = samples;
    row.comm_rounds = rounds;
    if (const auto target = recorder.td_target(pi)) {
      row.td_rel_err = metrics::relative_td_error(v_next, *target);
    }
    row.extra = reward_model_error(mdp, reward_features, lambda);
    v = std::move(v_next);
    pi = policy::JointSoftmaxPolicy(std::move(next));
    recorder.emit(result, row, pi);
  }
  result.output_iterate = ac::pick_output_iterate(cfg.seed, static_cast<int>(result.records.size()));
  return result;
}

}  // namespace dmarl::dacrp
