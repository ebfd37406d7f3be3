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

#include "dmarl/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dmarl/error.hpp"

namespace dmarl::mdp {

namespace {

constexpr double kDistributionTolerance = 1e-12;

void check_distribution(std::span<const double> p, const char* what) {
  double total = 0.0;
  for (double x : p) {
    require(std::isfinite(x) && x >= 0.0, std::string(what) + " has a negative or non-finite entry");
    total += x;
  }
  require(std::abs(total - 1.0) <= kDistributionTolerance * static_cast<double>(p.size()) + kDistributionTolerance,
          std::string(what) + " does not sum to one");
}

}  // namespace

MultiAgentMdp::MultiAgentMdp(int num_states, std::vector<int> action_counts,
                             std::vector<double> transition,
                             std::vector<std::vector<double>> rewards, double gamma,
                             std::vector<double> restart)
    : num_states_(num_states),
      action_counts_(std::move(action_counts)),
      transition_(std::move(transition)),
      rewards_(std::move(rewards)),
      gamma_(gamma),
      restart_(std::move(restart)) {
  require(num_states_ >= 1, "MDP needs at least one state");
  require(!action_counts_.empty(), "MDP needs at least one agent");
  radix_.assign(action_counts_.size(), 1);
  for (std::size_t i = action_counts_.size(); i-- > 0;) {
    require(action_counts_[i] >= 1, "every agent needs at least one action");
    radix_[i] = num_joint_;
    num_joint_ *= action_counts_[i];
  }
  require(gamma_ >= 0.0 && gamma_ < 1.0, "discount factor must lie in [0, 1)");
  const std::size_t cells = static_cast<std::size_t>(num_states_) *
                            static_cast<std::size_t>(num_joint_) *
                            static_cast<std::size_t>(num_states_);
  require(transition_.size() == cells, "transition tensor has the wrong size");
  require(rewards_.size() == action_counts_.size(), "one reward tensor per agent required");
  for (const auto& r : rewards_) {
    require(r.size() == cells, "reward tensor has the wrong size");
    for (double x : r) require(std::isfinite(x), "rewards must be finite");
  }
  require(restart_.size() == static_cast<std::size_t>(num_states_),
          "restart distribution needs one entry per state");
  check_distribution(restart_, "restart distribution");
  for (int s = 0; s < num_states_; ++s) {
    for (int a = 0; a < num_joint_; ++a) check_distribution(transition_row(s, a), "transition row");
  }
  mean_rewards_.assign(cells, 0.0);
  for (const auto& r : rewards_) {
    for (std::size_t i = 0; i < cells; ++i) mean_rewards_[i] += r[i];
  }
  const double inv_m = 1.0 / static_cast<double>(rewards_.size());
  for (double& x : mean_rewards_) x *= inv_m;
  expected_mean_reward_ = compute_expected_mean_reward();
}

double MultiAgentMdp::restart_transition(int s, int a, int next) const {
  return gamma_ * transition(s, a, next) +
         (1.0 - gamma_) * restart_[static_cast<std::size_t>(next)];
}

double MultiAgentMdp::mean_reward(int s, int a, int next) const {
  require(s >= 0 && s < num_states_ && next >= 0 && next < num_states_,
          "mean_reward: state index out of range");
  require(a >= 0 && a < num_joint_, "mean_reward: joint action out of range");
  return mean_rewards_[index(s, a, next)];
}

Eigen::MatrixXd MultiAgentMdp::compute_expected_mean_reward() const {
  Eigen::MatrixXd out(num_states_, num_joint_);
  for (int s = 0; s < num_states_; ++s) {
    for (int a = 0; a < num_joint_; ++a) {
      double acc = 0.0;
      const std::size_t base = index(s, a, 0);
      for (int n = 0; n < num_states_; ++n) acc += transition_[base + n] * mean_rewards_[base + n];
      out(s, a) = acc;
    }
  }
  return out;
}

int MultiAgentMdp::agent_action(int joint_action, int m) const {
  const auto i = static_cast<std::size_t>(m);
  return (joint_action / radix_[i]) % action_counts_[i];
}

int MultiAgentMdp::encode(std::span<const int> per_agent) const {
  require(per_agent.size() == action_counts_.size(), "encode: one action per agent");
  int joint = 0;
  for (std::size_t i = 0; i < per_agent.size(); ++i) {
    require(per_agent[i] >= 0 && per_agent[i] < action_counts_[i], "encode: action out of range");
    joint += per_agent[i] * radix_[i];
  }
  return joint;
}

MultiAgentMdp generate_random_mdp(const RandomMdpSpec& spec) {
  require(spec.num_states >= 1 && spec.num_agents >= 1 && spec.actions_per_agent >= 1,
          "random MDP dimensions must be positive");
  require(spec.initial_state >= 0 && spec.initial_state < spec.num_states,
          "initial state out of range");
  Rng rng(spec.seed);
  std::vector<int> actions(static_cast<std::size_t>(spec.num_agents), spec.actions_per_agent);
  int joint = 1;
  for (int a : actions) joint *= a;
  const auto S = static_cast<std::size_t>(spec.num_states);
  const std::size_t cells = S * static_cast<std::size_t>(joint) * S;

  std::vector<double> p(cells);
  for (std::size_t row = 0; row < cells; row += S) {
    double total = 0.0;
    for (std::size_t n = 0; n < S; ++n) {
      p[row + n] = std::abs(rng.normal());
      total += p[row + n];
    }
    for (std::size_t n = 0; n < S; ++n) p[row + n] /= total;
  }

  std::vector<std::vector<double>> rewards(static_cast<std::size_t>(spec.num_agents),
                                           std::vector<double>(cells));
  for (auto& r : rewards) {
    for (double& x : r) x = rng.normal();
  }
  if (spec.rescale_rewards) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& r : rewards) {
      const auto [mn, mx] = std::minmax_element(r.begin(), r.end());
      lo = std::min(lo, *mn);
      hi = std::max(hi, *mx);
    }
    const double span = hi > lo ? hi - lo : 1.0;
    for (auto& r : rewards) {
      for (double& x : r) x = (x - lo) / span;
    }
  }

  std::vector<double> restart(S, 0.0);
  restart[static_cast<std::size_t>(spec.initial_state)] = 1.0;
  return MultiAgentMdp(spec.num_states, std::move(actions), std::move(p), std::move(rewards),
                       spec.gamma, std::move(restart));
}

namespace {

struct Step {
  int next;
  double reward;      // meaningful unless at_goal
  bool at_goal;       // lands on or stays at the goal
};

Step cliff_step(int pos, int move) {
  using namespace cliff;
  if (pos == kGoal) return {kGoal, 0.0, true};
  int row = pos / kCols;
  int col = pos % kCols;
  switch (move) {
    case kUp: --row; break;
    case kDown: ++row; break;
    case kLeft: --col; break;
    default: ++col; break;
  }
  if (row < 0 || row >= kRows || col < 0 || col >= kCols) return {pos, kStepReward, false};
  const int target = cell(row, col);
  if (target == kCliffA || target == kCliffB) return {kStart, kCliffReward, false};
  if (target == kGoal) return {kGoal, 0.0, true};
  return {target, kStepReward, false};
}

}  // namespace

MultiAgentMdp build_cliff_navigation(double gamma) {
  using namespace cliff;
  constexpr int kStates = kCells * kCells;
  constexpr int kJoint = 16;
  const std::size_t cells = static_cast<std::size_t>(kStates) * kJoint * kStates;
  std::vector<double> p(cells, 0.0);
  std::vector<std::vector<double>> rewards(2, std::vector<double>(cells, 0.0));

  for (int p1 = 0; p1 < kCells; ++p1) {
    for (int p2 = 0; p2 < kCells; ++p2) {
      const int s = state_of(p1, p2);
      for (int a1 = 0; a1 < 4; ++a1) {
        for (int a2 = 0; a2 < 4; ++a2) {
          const int a = a1 * 4 + a2;
          const Step x = cliff_step(p1, a1);
          const Step y = cliff_step(p2, a2);
          const int next = state_of(x.next, y.next);
          const std::size_t idx = (static_cast<std::size_t>(s) * kJoint + a) * kStates + next;
          p[idx] = 1.0;
          // Reaching or staying at the goal pays 0 only when the other agent is
          // (or simultaneously arrives) there too.
          rewards[0][idx] = x.at_goal ? (y.next == kGoal ? 0.0 : kWaitReward) : x.reward;
          rewards[1][idx] = y.at_goal ? (x.next == kGoal ? 0.0 : kWaitReward) : y.reward;
        }
      }
    }
  }
  std::vector<double> restart(kStates, 0.0);
  restart[static_cast<std::size_t>(state_of(kStart, kStart))] = 1.0;
  return MultiAgentMdp(kStates, {4, 4}, std::move(p), std::move(rewards), gamma,
                       std::move(restart));
}

TrajectoryBatch advance_chain(const MultiAgentMdp& mdp, ChainState& chain,
                              const policy::Policy& policy, int n, Kernel kernel) {
  require(n >= 1, "advance_chain: sample count must be positive");
  require(chain.state >= 0 && chain.state < mdp.num_states(), "advance_chain: invalid chain state");
  require(policy.num_states() == mdp.num_states() &&
              policy.num_joint_actions() == mdp.num_joint_actions(),
          "advance_chain: policy does not match the MDP");
  TrajectoryBatch batch;
  batch.kernel = kernel;
  batch.records.reserve(static_cast<std::size_t>(n));
  const std::span<const double> restart(mdp.restart());
  for (int i = 0; i < n; ++i) {
    const int s = chain.state;
    const int a = policy.sample_joint_action(s, chain.rng);
    int next;
    if (kernel == Kernel::kTrue || chain.rng.uniform() < mdp.gamma()) {
      next = chain.rng.categorical(mdp.transition_row(s, a));
    } else {
      next = chain.rng.categorical(restart);
    }
    const int aux = chain.rng.categorical(mdp.transition_row(s, a));
    batch.records.push_back({s, a, next, aux});
    chain.state = next;
  }
  return batch;
}

}  // namespace dmarl::mdp
