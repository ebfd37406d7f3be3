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

#include "dmarl/nac.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dmarl/error.hpp"
#include "dmarl/oracle.hpp"

namespace dmarl::nac {

void NacConfig::validate(int num_agents) const {
  base.validate(num_agents);
  require(eta > 0.0, "inner step size must be positive");
  require(k_steps >= 1, "inner step count must be positive");
  require(t_z >= 0, "z-consensus rounds must be nonnegative");
  require(surrogate_ridge >= 0.0, "surrogate ridge must be nonnegative");
  (void)schedule();
}

std::vector<int> NacConfig::schedule() const {
  return batch_schedule(base.batch, k_steps, eta, lambda_f, mode);
}

long long NacConfig::rounds_per_iteration() const {
  const long long critic = base.critic.t_c + base.critic.t_c_prime;
  if (!base.strict_rounds) return critic + base.noise.rounds + t_z;
  return critic + static_cast<long long>(base.batch) * base.noise.rounds +
         static_cast<long long>(k_steps) * t_z;
}

long long NacConfig::samples_per_iteration() const { return base.samples_per_iteration(); }

std::vector<double> geometric_schedule_real(int n_total, int k_steps, double eta, double lambda_f) {
  require(k_steps >= 1, "schedule needs at least one step");
  const double c = eta * lambda_f / 2.0;
  require(c > 0.0 && c < 1.0, "geometric schedule needs 0 < eta * lambda_f / 2 < 1");
  const double q = 1.0 - c;
  const double rq = std::sqrt(q);
  const double scale = static_cast<double>(n_total) * (1.0 - rq) / (1.0 - std::pow(q, k_steps / 2.0));
  std::vector<double> out(static_cast<std::size_t>(k_steps));
  for (int k = 0; k < k_steps; ++k) {
    out[static_cast<std::size_t>(k)] = scale * std::pow(q, (k_steps - 1 - k) / 2.0);
  }
  return out;
}

std::vector<int> batch_schedule(int n_total, int k_steps, double eta, double lambda_f,
                                ScheduleMode mode) {
  require(k_steps >= 1, "schedule needs at least one step");
  require(n_total >= k_steps, "infeasible schedule: total batch smaller than step count");
  const auto K = static_cast<std::size_t>(k_steps);
  if (mode == ScheduleMode::kConstant) {
    require(n_total % k_steps == 0, "constant schedule needs N divisible by K");
    return std::vector<int>(K, n_total / k_steps);
  }
  if (k_steps == 1) return {n_total};

  const std::vector<double> real = geometric_schedule_real(n_total, k_steps, eta, lambda_f);
  std::vector<int> out(K);
  std::vector<double> frac(K);
  int assigned = 0;
  for (std::size_t k = 0; k < K; ++k) {
    out[k] = static_cast<int>(std::floor(real[k]));
    frac[k] = real[k] - out[k];
    assigned += out[k];
  }
  std::vector<std::size_t> order(K);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (frac[a] != frac[b]) return frac[a] > frac[b];
    return a > b;
  });
  // Floating error can leave the floors one off in either direction.
  for (std::size_t i = 0; assigned < n_total; i = (i + 1) % K, ++assigned) ++out[order[i]];
  for (std::size_t i = K; assigned > n_total; --assigned) {
    i = (i == 0 ? K : i) - 1;
    --out[order[i]];
  }
  // Lift empty early steps by borrowing from the largest entry.
  for (std::size_t k = 0; k < K; ++k) {
    while (out[k] < 1) {
      auto top = std::max_element(out.begin(), out.end());
      --*top;
      ++out[k];
    }
  }
  return out;
}

namespace {

// psi^(m)(a_m | s)^T h^(m) = h(s, a_m) - sum_b pi(b|s) h(s, b).
double score_dot(const Eigen::MatrixXd& dist, const Eigen::MatrixXd& h, int s, int a_m) {
  return h(s, a_m) - dist.row(s).dot(h.row(s));
}

std::vector<Eigen::MatrixXd> agent_tables(const policy::JointSoftmaxPolicy& pi) {
  std::vector<Eigen::MatrixXd> out;
  for (int m = 0; m < pi.num_agents(); ++m) out.push_back(pi.local_distribution(m));
  return out;
}

Eigen::MatrixXd z_from_tables(const gossip::MixingMatrix& w, const std::vector<Eigen::MatrixXd>& dists,
                              const policy::JointSoftmaxPolicy& pi,
                              const std::vector<Eigen::MatrixXd>& h,
                              std::span<const mdp::Transition> records, int t_z) {
  const int M = pi.num_agents();
  const auto n = static_cast<Eigen::Index>(records.size());
  Eigen::MatrixXd z(M, n);
  for (int m = 0; m < M; ++m) {
    const auto i_m = static_cast<std::size_t>(m);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& r = records[static_cast<std::size_t>(i)];
      z(m, i) = score_dot(dists[i_m], h[i_m], r.state, pi.agent_action(r.joint_action, m));
    }
  }
  return static_cast<double>(M) * gossip::gossip_rounds(w, z, t_z);
}

Eigen::MatrixXd quadratic_from_table(const Eigen::MatrixXd& dist, const policy::JointSoftmaxPolicy& pi,
                                     std::span<const mdp::Transition> records,
                                     const Eigen::MatrixXd& z, const Eigen::MatrixXd& grad_j, int m) {
  Eigen::MatrixXd fisher_part = Eigen::MatrixXd::Zero(dist.rows(), dist.cols());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const double zi = z(m, static_cast<Eigen::Index>(i));
    fisher_part.row(r.state) -= zi * dist.row(r.state);
    fisher_part(r.state, pi.agent_action(r.joint_action, m)) += zi;
  }
  return fisher_part / static_cast<double>(records.size()) - grad_j;
}

std::vector<Eigen::MatrixXd> split(const policy::JointSoftmaxPolicy& pi, const Eigen::VectorXd& flat) {
  return policy::JointSoftmaxPolicy::unflatten(pi.num_states(), pi.action_counts(), flat).all_params();
}

Eigen::VectorXd join(const std::vector<Eigen::MatrixXd>& h) {
  return policy::JointSoftmaxPolicy(h).flatten();
}

}  // namespace

Eigen::MatrixXd z_consensus(const gossip::MixingMatrix& w, const policy::JointSoftmaxPolicy& pi,
                            const std::vector<Eigen::MatrixXd>& h,
                            std::span<const mdp::Transition> records, int t_z) {
  const int M = pi.num_agents();
  require(t_z >= 0, "z-consensus rounds must be nonnegative");
  require(w.size() == M, "mixing matrix size must equal the number of agents");
  require(static_cast<int>(h.size()) == M, "one natural-gradient block per agent required");
  for (int m = 0; m < M; ++m) {
    const auto& hm = h[static_cast<std::size_t>(m)];
    require(hm.rows() == pi.num_states() &&
                hm.cols() == pi.action_counts()[static_cast<std::size_t>(m)],
            "natural-gradient block has the wrong shape");
  }
  return z_from_tables(w, agent_tables(pi), pi, h, records, t_z);
}

Eigen::MatrixXd local_quadratic_gradient(const policy::JointSoftmaxPolicy& pi,
                                         std::span<const mdp::Transition> records,
                                         const Eigen::MatrixXd& z, const Eigen::MatrixXd& grad_j,
                                         int m) {
  require(!records.empty(), "inner gradient needs a nonempty batch");
  require(z.cols() == static_cast<Eigen::Index>(records.size()) && m < z.rows(),
          "one z estimate per record required");
  const Eigen::MatrixXd dist = pi.local_distribution(m);
  require(grad_j.rows() == dist.rows() && grad_j.cols() == dist.cols(),
          "gradient block has the wrong shape");
  return quadratic_from_table(dist, pi, records, z, grad_j, m);
}

std::vector<Eigen::VectorXd> surrogate_descent(const Eigen::MatrixXd& a, const Eigen::VectorXd& g,
                                               const Eigen::VectorXd& h0, double eta, int k) {
  require(a.rows() == a.cols() && a.rows() == g.size() && g.size() == h0.size(),
          "surrogate descent: dimension mismatch");
  std::vector<Eigen::VectorXd> path{h0};
  Eigen::VectorXd h = h0;
  for (int i = 0; i < k; ++i) {
    h -= eta * (a * h - g);
    path.push_back(h);
  }
  return path;
}

metrics::RunResult run_nac(const mdp::MultiAgentMdp& mdp, const gossip::MixingMatrix& w,
                           const policy::FeatureMap& features, const NacConfig& cfg,
                           const policy::JointSoftmaxPolicy& initial,
                           const metrics::Recorder& recorder) {
  const int M = mdp.num_agents();
  cfg.validate(M);
  require(w.size() == M, "mixing matrix size must equal the number of agents");
  require(initial.num_states() == mdp.num_states() &&
              initial.action_counts() == mdp.action_counts(),
          "initial policy does not match the MDP");
  require(cfg.h_init.size() == 0 || cfg.h_init.size() == initial.dim(),
          "initial natural gradient must match the policy dimension");
  const std::vector<int> schedule = cfg.schedule();
  const ac::AcConfig& base = cfg.base;

  mdp::ChainState critic_chain = ac::start_chain(mdp, Rng::derive(base.seed, ac::kCriticChain));
  mdp::ChainState actor_chain = ac::start_chain(mdp, Rng::derive(base.seed, ac::kActorChain));
  Rng noise_rng = Rng::derive(base.seed, ac::kRewardNoise);

  metrics::RunResult result;
  result.iterates.push_back(initial.flatten());
  policy::JointSoftmaxPolicy pi = initial;
  critic::CriticState critic_state;
  std::vector<Eigen::MatrixXd> h =
      split(pi, cfg.h_init.size() ? cfg.h_init : Eigen::VectorXd::Zero(pi.dim()));
  long long samples = 0;
  long long rounds = 0;

  for (int t = 1; t <= base.iterations; ++t) {
    critic_state = critic::run_decentralized_td(mdp, pi, w, features, base.critic, critic_chain,
                                                &critic_state);
    double reward_err_sum = 0.0;
    int reward_err_count = 0;
    if (cfg.surrogate) {
      const oracle::NaturalGradient ng =
          oracle::fisher_and_natural_gradient(mdp, pi, cfg.surrogate_ridge);
      Eigen::MatrixXd a = ng.fisher;
      a.diagonal().array() += cfg.surrogate_ridge;
      const Eigen::VectorXd g = oracle::exact_policy_gradient(mdp, pi);
      h = split(pi, surrogate_descent(a, g, join(h), cfg.eta, cfg.k_steps).back());
    } else {
      const std::vector<Eigen::MatrixXd> dists = agent_tables(pi);
      const Eigen::MatrixXd values = critic_state.thetas * features.table().transpose();  // M x S
      for (int k = 0; k < cfg.k_steps; ++k) {
        const int n_k = schedule[static_cast<std::size_t>(k)];
        const ac::SharedBatch shared =
            ac::collect_shared_batch(mdp, w, pi, base.noise, actor_chain, noise_rng, n_k);
        if (const auto e = metrics::relative_reward_error(shared.estimates, shared.true_means)) {
          reward_err_sum += *e;
          ++reward_err_count;
        }
        const std::span<const mdp::Transition> recs(shared.batch.records);
        const Eigen::MatrixXd z = z_from_tables(w, dists, pi, h, recs, cfg.t_z);
        std::vector<Eigen::MatrixXd> next(static_cast<std::size_t>(M));
        for (int m = 0; m < M; ++m) {
          const auto i_m = static_cast<std::size_t>(m);
          const Eigen::MatrixXd grad_j = ac::local_policy_gradient_estimate(
              shared.batch, shared.estimates.row(m).transpose(), values.row(m).transpose(),
              dists[i_m], pi, mdp.gamma(), m);
          next[i_m] = h[i_m] - cfg.eta * quadratic_from_table(dists[i_m], pi, recs, z, grad_j, m);
        }
        h = std::move(next);
      }
    }
    samples += cfg.samples_per_iteration();
    rounds += cfg.rounds_per_iteration();

    std::vector<Eigen::MatrixXd> next(static_cast<std::size_t>(M));
    bool finite = true;
    for (int m = 0; m < M; ++m) {
      next[static_cast<std::size_t>(m)] = pi.params(m) + base.alpha * h[static_cast<std::size_t>(m)];
      finite = finite && next[static_cast<std::size_t>(m)].allFinite();
    }
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
    if (reward_err_count > 0) row.reward_rel_err = reward_err_sum / reward_err_count;
    pi = policy::JointSoftmaxPolicy(std::move(next));
    result.directions.push_back(join(h));
    recorder.emit(result, row, pi);
  }
  result.output_iterate =
      ac::pick_output_iterate(base.seed, static_cast<int>(result.records.size()));
  return result;
}

}  // namespace dmarl::nac
