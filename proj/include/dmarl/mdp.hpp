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

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dmarl/policy.hpp"
#include "dmarl/rng.hpp"

namespace dmarl::mdp {

/// Which kernel drives the chain successor: the true kernel P, or the restart
/// kernel P_xi(. | s, a) = gamma P(. | s, a) + (1 - gamma) xi.
enum class Kernel { kTrue, kRestart };

/// Tabular multi-agent MDP with a shared state, a joint action built from
/// per-agent actions, and one reward tensor per agent.
///
/// Tensors are dense, indexed [s][a][s'] with a the mixed-radix joint action
/// (agent 0 most significant). Immutable after construction.
class MultiAgentMdp {
 public:
  MultiAgentMdp(int num_states, std::vector<int> action_counts,
                std::vector<double> transition, std::vector<std::vector<double>> rewards,
                double gamma, std::vector<double> restart);

  int num_states() const { return num_states_; }
  int num_agents() const { return static_cast<int>(action_counts_.size()); }
  int num_joint_actions() const { return num_joint_; }
  const std::vector<int>& action_counts() const { return action_counts_; }
  double gamma() const { return gamma_; }
  const std::vector<double>& restart() const { return restart_; }

  double transition(int s, int a, int next) const { return transition_[index(s, a, next)]; }
  std::span<const double> transition_row(int s, int a) const {
    return {transition_.data() + index(s, a, 0), static_cast<std::size_t>(num_states_)};
  }
  /// gamma P(next | s, a) + (1 - gamma) xi(next).
  double restart_transition(int s, int a, int next) const;

  double reward(int m, int s, int a, int next) const {
    return rewards_[static_cast<std::size_t>(m)][index(s, a, next)];
  }
  const std::vector<double>& reward_tensor(int m) const { return rewards_[static_cast<std::size_t>(m)]; }
  const std::vector<double>& transition_tensor() const { return transition_; }

  /// (1/M) sum_m R^(m)(s, a, next). Bounds-checked.
  double mean_reward(int s, int a, int next) const;
  /// Unchecked variant for inner loops.
  double mean_reward_unchecked(int s, int a, int next) const { return mean_rewards_[index(s, a, next)]; }

  /// |S| x |A| matrix of E_{s' ~ P}[mean reward].
  const Eigen::MatrixXd& expected_mean_reward() const { return expected_mean_reward_; }

  int agent_action(int joint_action, int m) const;
  int encode(std::span<const int> per_agent) const;

  std::size_t index(int s, int a, int next) const {
    return (static_cast<std::size_t>(s) * static_cast<std::size_t>(num_joint_) +
            static_cast<std::size_t>(a)) * static_cast<std::size_t>(num_states_) +
           static_cast<std::size_t>(next);
  }

 private:
  Eigen::MatrixXd compute_expected_mean_reward() const;
  int num_states_;
  std::vector<int> action_counts_;
  std::vector<int> radix_;
  int num_joint_ = 1;
  std::vector<double> transition_;
  std::vector<std::vector<double>> rewards_;
  std::vector<double> mean_rewards_;
  Eigen::MatrixXd expected_mean_reward_;
  double gamma_;
  std::vector<double> restart_;
};

struct RandomMdpSpec {
  std::uint64_t seed = 1;
  int num_states = 5;
  int num_agents = 6;
  int actions_per_agent = 2;
  double gamma = 0.95;
  int initial_state = 0;
  /// Min-max rescale every agent's rewards into [0, 1]. Off by default.
  bool rescale_rewards = false;
};

/// P[s][a][s'] = |g| / sum |g| and R^(m)[s][a][s'] = g' with g, g' standard
/// Gaussian; restart is a point mass at initial_state.
MultiAgentMdp generate_random_mdp(const RandomMdpSpec& spec);

namespace cliff {
inline constexpr int kRows = 3;
inline constexpr int kCols = 4;
inline constexpr int kCells = kRows * kCols;
inline constexpr int kStart = 2 * kCols + 0;
inline constexpr int kCliffA = 2 * kCols + 1;
inline constexpr int kCliffB = 2 * kCols + 2;
inline constexpr int kGoal = 2 * kCols + 3;
enum Move { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };
inline constexpr double kStepReward = -1.0;
inline constexpr double kCliffReward = -100.0;
inline constexpr double kWaitReward = -0.5;

inline int state_of(int pos1, int pos2) { return pos1 * kCells + pos2; }
inline int cell(int row, int col) { return row * kCols + col; }
}  // namespace cliff

/// Two agents on a 3 x 4 grid (start bottom-left, cliff on the two bottom
/// middle cells, goal bottom-right). Global state = (pos1, pos2), 144 states,
/// four moves per agent.
MultiAgentMdp build_cliff_navigation(double gamma);

/// A transition record. `next_state` is the chain successor drawn from the
/// batch kernel; `aux_next_state` is an independent draw from the true kernel.
struct Transition {
  int state;
  int joint_action;
  int next_state;
  int aux_next_state;
};

struct TrajectoryBatch {
  std::vector<Transition> records;
  Kernel kernel = Kernel::kTrue;

  std::size_t size() const { return records.size(); }
};

/// A persistent Markov chain: current state plus its own random substream.
/// Single owner; never advance one chain from two threads.
struct ChainState {
  int state = 0;
  Rng rng;
};

/// Draws n consecutive records and leaves the chain at the last successor.
TrajectoryBatch advance_chain(const MultiAgentMdp& mdp, ChainState& chain,
                              const policy::Policy& policy, int n, Kernel kernel);

/// Structured text dump (dimensions, gamma, restart, dense P and R tensors in
/// row-major order, 17 significant digits).
void write_mdp_text(const MultiAgentMdp& mdp, std::ostream& out);
MultiAgentMdp read_mdp_text(std::istream& in);

}  // namespace dmarl::mdp
