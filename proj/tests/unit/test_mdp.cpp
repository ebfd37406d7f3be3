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


#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include <doctest.h>

#include "dmarl/error.hpp"
#include "dmarl/mdp.hpp"
#include "dmarl/oracle.hpp"
#include "test_support.hpp"

using namespace dmarl;
using namespace dmarl::mdp;

TEST_CASE("random MDP dimensions and normalization") {
  auto m = testing::ring_random_mdp(1);
  CHECK(m.num_states() == 5);
  CHECK(m.num_agents() == 6);
  CHECK(m.num_joint_actions() == 64);
  CHECK(m.transition_tensor().size() == 1600u);
  for (int s = 0; s < 5; ++s)
    for (int a = 0; a < 64; ++a) {
      double sum = 0.0;
      for (double p : m.transition_row(s, a)) {
        CHECK(p >= 0.0);
        sum += p;
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
  CHECK(m.restart()[0] == 1.0);
  CHECK(m.gamma() == 0.95);
}

TEST_CASE("random MDP is a function of its seed") {
  auto a = testing::ring_random_mdp(1);
  auto b = testing::ring_random_mdp(1);
  auto c = testing::ring_random_mdp(2);
  CHECK(a.transition_tensor() == b.transition_tensor());
  for (int m = 0; m < 6; ++m) CHECK(a.reward_tensor(m) == b.reward_tensor(m));
  CHECK(a.transition_tensor() != c.transition_tensor());
}

TEST_CASE("mean reward") {
  auto m = testing::ring_random_mdp(1);
  double sum = 0.0;
  for (int k = 0; k < 6; ++k) sum += m.reward(k, 3, 17, 2);
  CHECK(m.mean_reward(3, 17, 2) == doctest::Approx(sum / 6.0).epsilon(1e-15));
  CHECK_THROWS_AS(m.mean_reward(5, 0, 0), Error);
  CHECK_THROWS_AS(m.mean_reward(0, 64, 0), Error);

  auto two = testing::single_state_mdp({1, 1}, {{-1.0}, {0.0}}, 0.9);
  CHECK(two.mean_reward(0, 0, 0) == doctest::Approx(-0.5));
  auto same = testing::single_state_mdp({2, 2}, {{0.3, 0.3, 0.3, 0.3}, {0.3, 0.3, 0.3, 0.3}}, 0.9);
  CHECK(same.mean_reward(0, 2, 0) == doctest::Approx(0.3));
}

TEST_CASE("rescaled rewards lie in the unit interval") {
  RandomMdpSpec spec;
  spec.rescale_rewards = true;
  auto m = generate_random_mdp(spec);
  for (int k = 0; k < m.num_agents(); ++k)
    for (double r : m.reward_tensor(k)) {
      CHECK(r >= 0.0);
      CHECK(r <= 1.0);
    }
}

TEST_CASE("joint action encoding puts agent 0 first") {
  auto m = testing::small_random_mdp(3, 2, 3, 2);
  std::vector<int> acts{1, 0, 1};
  CHECK(m.encode(acts) == 5);
  CHECK(m.agent_action(5, 0) == 1);
  CHECK(m.agent_action(5, 1) == 0);
  CHECK(m.agent_action(5, 2) == 1);
}

TEST_CASE("restart kernel dominates the true kernel") {
  auto m = testing::small_random_mdp(4, 4, 2, 3, 0.8);
  for (int s = 0; s < m.num_states(); ++s)
    for (int a = 0; a < m.num_joint_actions(); ++a)
      for (int t = 0; t < m.num_states(); ++t)
        CHECK(m.transition(s, a, t) <= m.restart_transition(s, a, t) / m.gamma() + 1e-15);
}

TEST_CASE("restart kernel limits") {
  auto base = testing::small_random_mdp(5, 4, 2, 2, 0.9);
  auto with_gamma = [&](double g) {
    std::vector<std::vector<double>> rewards;
    for (int k = 0; k < base.num_agents(); ++k) rewards.push_back(base.reward_tensor(k));
    return MultiAgentMdp(base.num_states(), base.action_counts(), base.transition_tensor(),
                         rewards, g, base.restart());
  };
  auto near_one = with_gamma(1.0 - 1e-12);
  for (int s = 0; s < 4; ++s)
    for (int a = 0; a < 4; ++a)
      for (int t = 0; t < 4; ++t)
        CHECK(std::abs(near_one.restart_transition(s, a, t) - near_one.transition(s, a, t)) <= 1e-10);

  auto zero = with_gamma(0.0);
  auto pi = testing::random_policy(zero, 1);
  ChainState chain{2, Rng(8)};
  auto batch = advance_chain(zero, chain, pi, 200, Kernel::kRestart);
  for (const auto& r : batch.records) CHECK(r.next_state == 0);
}

TEST_CASE("batches chain and the chain persists") {
  auto m = testing::small_random_mdp(6, 5, 2, 2);
  auto pi = testing::random_policy(m, 2);
  ChainState chain{0, Rng(3)};
  for (Kernel k : {Kernel::kTrue, Kernel::kRestart}) {
    auto first = advance_chain(m, chain, pi, 50, k);
    CHECK(first.size() == 50u);
    CHECK(first.kernel == k);
    for (std::size_t i = 0; i + 1 < first.size(); ++i)
      CHECK(first.records[i + 1].state == first.records[i].next_state);
    CHECK(chain.state == first.records.back().next_state);
    auto second = advance_chain(m, chain, pi, 5, k);
    CHECK(second.records.front().state == first.records.back().next_state);
  }
}

TEST_CASE("restart chain visits states per the discounted visitation") {
  auto m = testing::ring_random_mdp(1);
  policy::JointSoftmaxPolicy pi(m.num_states(), m.action_counts());
  ChainState chain{0, Rng(21)};
  const int n = 200000;
  auto batch = advance_chain(m, chain, pi, n, Kernel::kRestart);
  Eigen::VectorXd freq = Eigen::VectorXd::Zero(m.num_states());
  for (const auto& r : batch.records) freq(r.state) += 1.0 / n;
  const Eigen::VectorXd nu = oracle::discounted_visitation(m, pi);
  CHECK(0.5 * (freq - nu).cwiseAbs().sum() <= 0.01);
}

TEST_CASE("auxiliary successor follows the true kernel") {
  auto m = testing::small_random_mdp(7, 3, 1, 2, 0.5);
  policy::JointSoftmaxPolicy pi(m.num_states(), m.action_counts());
  ChainState chain{0, Rng(4)};
  auto batch = advance_chain(m, chain, pi, 200000, Kernel::kRestart);
  // frequency of aux successors from (s = 0, a = 0)
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(3);
  double total = 0.0;
  int agree = 0;
  for (const auto& r : batch.records) {
    if (r.state != 0 || r.joint_action != 0) continue;
    counts(r.aux_next_state) += 1.0;
    total += 1.0;
    agree += r.aux_next_state == r.next_state;
  }
  REQUIRE(total > 5000);
  for (int t = 0; t < 3; ++t) {
    const double p = m.transition(0, 0, t);
    CHECK(std::abs(counts(t) / total - p) <= 4.0 * std::sqrt(p * (1 - p) / total) + 1e-12);
  }
  // independent draws agree with probability sum_t P(t) P_xi(t)
  double p_agree = 0.0;
  for (int t = 0; t < 3; ++t) p_agree += m.transition(0, 0, t) * m.restart_transition(0, 0, t);
  CHECK(std::abs(agree / total - p_agree) <= 4.0 * std::sqrt(p_agree * (1 - p_agree) / total));
}

TEST_CASE("cliff layout and dynamics") {
  using namespace cliff;
  auto c = build_cliff_navigation(0.95);
  CHECK(c.num_states() == 144);
  CHECK(c.num_joint_actions() == 16);
  CHECK(c.num_agents() == 2);
  CHECK(c.restart()[static_cast<std::size_t>(state_of(kStart, kStart))] == 1.0);

  std::set<double> values;
  for (int k = 0; k < 2; ++k)
    for (double r : c.reward_tensor(k)) values.insert(r);
  for (double v : values) CHECK((v == 0.0 || v == -0.5 || v == -1.0 || v == -100.0));

  auto step = [&](int p1, int p2, int a1, int a2) {
    const int s = state_of(p1, p2);
    const int a = c.encode(std::vector<int>{a1, a2});
    for (int t = 0; t < 144; ++t)
      if (c.transition(s, a, t) == 1.0) return std::pair{t, a};
    FAIL("transition is not deterministic");
    return std::pair{-1, -1};
  };
  {
    auto [t, a] = step(kGoal, kGoal, kUp, kLeft);
    CHECK(t == state_of(kGoal, kGoal));
    CHECK(c.reward(0, state_of(kGoal, kGoal), a, t) == 0.0);
    CHECK(c.reward(1, state_of(kGoal, kGoal), a, t) == 0.0);
  }
  {
    // agent 0 walks into the cliff, agent 1 bumps the left wall
    const int from = state_of(kStart, kStart);
    auto [t, a] = step(kStart, kStart, kRight, kLeft);
    CHECK(t == state_of(kStart, kStart));
    CHECK(c.reward(0, from, a, t) == kCliffReward);
    CHECK(c.reward(1, from, a, t) == kStepReward);
  }
  {
    // agent 0 reaches the goal alone, agent 1 moves up
    const int from = state_of(cell(1, 3), kStart);
    auto [t, a] = step(cell(1, 3), kStart, kDown, kUp);
    CHECK(t == state_of(kGoal, cell(1, 0)));
    CHECK(c.reward(0, from, a, t) == kWaitReward);
    CHECK(c.reward(1, from, a, t) == kStepReward);
  }
  {
    // simultaneous arrival
    const int from = state_of(cell(1, 3), cell(1, 3));
    auto [t, a] = step(cell(1, 3), cell(1, 3), kDown, kDown);
    CHECK(t == state_of(kGoal, kGoal));
    CHECK(c.reward(0, from, a, t) == 0.0);
    CHECK(c.reward(1, from, a, t) == 0.0);
  }
  {
    // one agent already waiting at the goal
    const int from = state_of(kGoal, cell(0, 0));
    auto [t, a] = step(kGoal, cell(0, 0), kLeft, kRight);
    CHECK(t == state_of(kGoal, cell(0, 1)));
    CHECK(c.reward(0, from, a, t) == kWaitReward);
  }
  // the goal is absorbing for each agent
  for (int p = 0; p < kCells; ++p)
    for (int a = 0; a < 16; ++a)
      for (int t = 0; t < 144; ++t)
        if (c.transition(state_of(kGoal, p), a, t) > 0.0) CHECK(t / kCells == kGoal);
}

TEST_CASE("text dump round trip") {
  auto m = testing::small_random_mdp(9, 3, 2, 2);
  std::stringstream ss;
  write_mdp_text(m, ss);
  auto back = read_mdp_text(ss);
  CHECK(back.num_states() == m.num_states());
  CHECK(back.action_counts() == m.action_counts());
  CHECK(back.gamma() == m.gamma());
  CHECK(back.transition_tensor() == m.transition_tensor());
  for (int k = 0; k < 2; ++k) CHECK(back.reward_tensor(k) == m.reward_tensor(k));
  CHECK(back.restart() == m.restart());
}

TEST_CASE("malformed MDPs are rejected") {
  CHECK_THROWS_AS(MultiAgentMdp(1, {2}, {0.5, 0.6}, {{0.0, 0.0}}, 0.9, {1.0}), Error);
  CHECK_THROWS_AS(MultiAgentMdp(1, {2}, {1.0, 1.0}, {{0.0, 0.0}}, 1.5, {1.0}), Error);
  CHECK_THROWS_AS(MultiAgentMdp(1, {2}, {1.0, 1.0}, {{0.0, 0.0}}, 0.9, {0.5}), Error);
}
