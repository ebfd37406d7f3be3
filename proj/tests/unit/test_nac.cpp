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


#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <doctest.h>

#include "dmarl/error.hpp"
#include "dmarl/nac.hpp"
#include "dmarl/oracle.hpp"
#include "test_support.hpp"

using namespace dmarl;
using namespace dmarl::nac;

namespace {

NacConfig ring_config() {
  NacConfig cfg;
  cfg.base.alpha = 0.1;
  cfg.base.iterations = 2000;
  cfg.base.batch = 100;
  cfg.base.noise = gossip::NoiseConfig::uniform(6, 0.1, 5);
  cfg.eta = 0.04;
  cfg.k_steps = 50;
  cfg.t_z = 5;
  return cfg;
}

std::vector<Eigen::MatrixXd> split(const policy::JointSoftmaxPolicy& pi, const Eigen::VectorXd& flat) {
  std::vector<Eigen::MatrixXd> out;
  for (int m = 0; m < pi.num_agents(); ++m) {
    const int a = pi.action_counts()[static_cast<std::size_t>(m)];
    Eigen::MatrixXd t(pi.num_states(), a);
    for (int s = 0; s < pi.num_states(); ++s)
      for (int b = 0; b < a; ++b) t(s, b) = flat(pi.flat_index(m, s, b));
    out.push_back(t);
  }
  return out;
}

Eigen::VectorXd random_vector(Rng& rng, int n) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.normal();
  return v;
}

}  // namespace

TEST_CASE("schedule examples") {
  CHECK(batch_schedule(37, 1, 0.04, 0.5, ScheduleMode::kGeometric) == std::vector<int>{37});
  CHECK(batch_schedule(37, 1, 0.04, 0.5, ScheduleMode::kConstant) == std::vector<int>{37});
  CHECK(batch_schedule(500, 100, 0.04, 0.0, ScheduleMode::kConstant) == std::vector<int>(100, 5));
  // 1 - eta lambda / 2 = 0.25
  CHECK(batch_schedule(100, 2, 1.5, 1.0, ScheduleMode::kGeometric) == std::vector<int>{33, 67});
  CHECK_THROWS_AS(batch_schedule(10, 20, 0.04, 0.5, ScheduleMode::kGeometric), Error);
  CHECK_THROWS_AS(batch_schedule(101, 10, 0.04, 0.5, ScheduleMode::kConstant), Error);
  CHECK_THROWS_AS(batch_schedule(100, 10, 4.0, 1.0, ScheduleMode::kGeometric), Error);
  CHECK_THROWS_AS(batch_schedule(100, 10, 0.04, 0.0, ScheduleMode::kGeometric), Error);
}

TEST_CASE("geometric schedule properties") {
  for (int n : {50, 100, 500, 2000, 12345})
    for (int k : {1, 2, 7, 50})
      for (double c : {1e-4, 0.01, 0.2, 0.75}) {
        if (n < k) continue;
        const double eta = 0.5, lambda = 2.0 * c / eta;
        const auto real = geometric_schedule_real(n, k, eta, lambda);
        const auto ints = batch_schedule(n, k, eta, lambda, ScheduleMode::kGeometric);
        REQUIRE(ints.size() == static_cast<std::size_t>(k));
        CHECK(std::accumulate(ints.begin(), ints.end(), 0) == n);
        const double q = 1.0 - c;
        double real_sum = 0.0;
        // entries below one are lifted by borrowing, which moves the largest ones
        const bool lifted = *std::min_element(real.begin(), real.end()) < 1.0;
        for (int j = 0; j < k; ++j) {
          const double closed = n * std::pow(q, (k - 1 - j) / 2.0) * (1.0 - std::sqrt(q)) /
                                (1.0 - std::pow(q, k / 2.0));
          CHECK(real[static_cast<std::size_t>(j)] == doctest::Approx(closed).epsilon(1e-12));
          real_sum += closed;
          CHECK(ints[static_cast<std::size_t>(j)] >= 1);
          if (!lifted) CHECK(std::abs(ints[static_cast<std::size_t>(j)] - closed) <= 1.0);
          if (j > 0) CHECK(ints[static_cast<std::size_t>(j)] >= ints[static_cast<std::size_t>(j - 1)]);
        }
        CHECK(real_sum == doctest::Approx(n).epsilon(1e-10));
      }
}

TEST_CASE("accounting") {
  auto cfg = ring_config();
  CHECK(cfg.rounds_per_iteration() == 70);
  CHECK(cfg.samples_per_iteration() == 600);
  cfg.base.strict_rounds = true;
  CHECK(cfg.rounds_per_iteration() == 50 + 10 + 100 * 5 + 50 * 5);
  CHECK(cfg.schedule() == std::vector<int>(50, 2));
}

TEST_CASE("z consensus") {
  auto m = testing::small_random_mdp(1, 4, 3, 2, 0.9);
  auto pi = testing::random_policy(m, 1);
  auto chain = ac::start_chain(m, Rng(2));
  auto batch = mdp::advance_chain(m, chain, pi, 25, mdp::Kernel::kRestart);
  std::span<const mdp::Transition> recs(batch.records);
  Rng rng(3);
  const Eigen::VectorXd h = random_vector(rng, pi.dim());
  const auto blocks = split(pi, h);

  auto avg = gossip::MixingMatrix::from_weights(Eigen::MatrixXd::Constant(3, 3, 1.0 / 3));
  Eigen::MatrixXd z = z_consensus(avg, pi, blocks, recs, 1);
  for (int i = 0; i < 25; ++i) {
    const auto& r = batch.records[static_cast<std::size_t>(i)];
    const double exact = pi.joint_score(r.state, r.joint_action).dot(h);
    for (int k = 0; k < 3; ++k) CHECK(z(k, i) == doctest::Approx(exact).epsilon(1e-12));
  }
  CHECK(z_consensus(avg, pi, split(pi, Eigen::VectorXd::Zero(pi.dim())), recs, 1).norm() == 0.0);

  auto ring = gossip::MixingMatrix::ring(3, 0.5, 0.25);
  z = z_consensus(ring, pi, blocks, recs, 5);
  for (int i = 0; i < 25; ++i) {
    const auto& r = batch.records[static_cast<std::size_t>(i)];
    Eigen::VectorXd z0(3);
    for (int k = 0; k < 3; ++k)
      z0(k) = (pi.local_score(k, r.state, m.agent_action(r.joint_action, k)).cwiseProduct(blocks[k])).sum();
    const double exact = z0.sum();
    const double spread = (z0.array() - z0.mean()).matrix().norm();
    for (int k = 0; k < 3; ++k)
      CHECK(std::abs(z(k, i) - exact) <= 3.0 * std::pow(ring.sigma(), 5) * spread + 1e-12);
  }
}

TEST_CASE("inner gradient equals the centralized estimator when consensus is exact") {
  auto m = testing::small_random_mdp(4, 4, 3, 2, 0.9);
  auto pi = testing::random_policy(m, 4);
  auto chain = ac::start_chain(m, Rng(5));
  auto batch = mdp::advance_chain(m, chain, pi, 40, mdp::Kernel::kRestart);
  std::span<const mdp::Transition> recs(batch.records);
  Rng rng(6);
  const Eigen::VectorXd h = random_vector(rng, pi.dim());
  const Eigen::VectorXd gj = random_vector(rng, pi.dim());
  auto avg = gossip::MixingMatrix::from_weights(Eigen::MatrixXd::Constant(3, 3, 1.0 / 3));
  const Eigen::MatrixXd z = z_consensus(avg, pi, split(pi, h), recs, 1);
  Eigen::VectorXd central = Eigen::VectorXd::Zero(pi.dim());
  for (const auto& r : batch.records) {
    const Eigen::VectorXd psi = pi.joint_score(r.state, r.joint_action);
    central += psi * psi.dot(h) / 40.0;
  }
  central -= gj;
  const auto expected = split(pi, central);
  const auto grads = split(pi, gj);
  for (int k = 0; k < 3; ++k) {
    const Eigen::MatrixXd got = local_quadratic_gradient(pi, recs, z, grads[k], k);
    CHECK((got - expected[k]).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("surrogate descent contracts") {
  auto m = testing::small_random_mdp(7, 4, 2, 2, 0.9);
  auto pi = testing::random_policy(m, 7);
  const double ridge = 1e-3;
  auto ng = oracle::fisher_and_natural_gradient(m, pi, ridge);
  Eigen::MatrixXd a = ng.fisher;
  a.diagonal().array() += ridge;
  const Eigen::VectorXd g = oracle::exact_policy_gradient(m, pi);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  const double eta = 1.0 / es.eigenvalues().maxCoeff();
  const double rate = 1.0 - eta * es.eigenvalues().minCoeff();
  Rng rng(8);
  const auto path = surrogate_descent(a, g, random_vector(rng, pi.dim()), eta, 200);
  REQUIRE(path.size() == 201u);
  const double e0 = (path[0] - ng.nat_grad).norm();
  for (int k = 1; k <= 200; ++k) {
    CHECK((path[k] - ng.nat_grad).norm() <=
          rate * (path[k - 1] - ng.nat_grad).norm() * (1 + 1e-9) + 1e-15);
  }
  CHECK((path[200] - ng.nat_grad).norm() <= std::pow(rate, 200) * e0 * (1 + 1e-9));
}

TEST_CASE("run accounting and frozen actor") {
  auto m = testing::ring_random_mdp(1);
  auto w = gossip::MixingMatrix::ring(6, 0.4, 0.3);
  auto phi = policy::build_identity_features(5);
  auto pi = testing::random_policy(m, 7);
  metrics::Recorder rec(m, phi, 0.0, {});
  auto cfg = ring_config();
  cfg.base.iterations = 40;
  cfg.base.alpha = 0.0;
  auto run = run_nac(m, w, phi, cfg, pi, rec);
  REQUIRE(run.records.size() == 40u);
  REQUIRE(run.directions.size() == 40u);
  for (int t = 1; t <= 40; ++t) {
    CHECK(run.records[t - 1].comm_rounds == 70LL * t);
    CHECK(run.records[t - 1].samples == 600LL * t);
  }
  for (const auto& it : run.iterates) CHECK(it == pi.flatten());
  // warm-started inner solves drift toward h(omega_0)
  const Eigen::VectorXd target = oracle::fisher_and_natural_gradient(m, pi, 1e-3).nat_grad;
  const double first = (run.directions.front() - target).norm();
  const double last = (run.directions.back() - target).norm();
  CHECK(last < first);

  auto again = run_nac(m, w, phi, cfg, pi, rec);
  CHECK(again.directions.back() == run.directions.back());
}

TEST_CASE("surrogate run converges to the oracle natural gradient") {
  auto m = testing::small_random_mdp(9, 3, 2, 2, 0.9);
  auto w = gossip::MixingMatrix::ring(2, 0.4, 0.3);
  auto phi = policy::build_identity_features(3);
  auto pi = testing::random_policy(m, 9);
  metrics::Recorder rec(m, phi, 0.0, {});
  NacConfig cfg;
  cfg.base.alpha = 0.0;
  cfg.base.iterations = 5;
  cfg.base.batch = 50;
  cfg.base.noise = gossip::NoiseConfig::uniform(2, 0.0, 1);
  cfg.base.critic.t_c = 1;
  cfg.k_steps = 50;
  cfg.eta = 1.0;
  cfg.surrogate = true;
  cfg.surrogate_ridge = 0.05;
  auto run = run_nac(m, w, phi, cfg, pi, rec);
  const Eigen::VectorXd target = oracle::fisher_and_natural_gradient(m, pi, 0.05).nat_grad;
  // 250 steps at rate 1 - 0.05 leave a factor below 3e-6 of the start
  const double start = target.norm();
  CHECK((run.directions.back() - target).norm() <= 3e-6 * start);
  cfg.base.iterations = 200;
  run = run_nac(m, w, phi, cfg, pi, rec);
  CHECK((run.directions.back() - target).norm() <= 1e-8);
}

TEST_CASE("config validation") {
  auto cfg = ring_config();
  CHECK_NOTHROW(cfg.validate(6));
  cfg.eta = 0.0;
  CHECK_THROWS_AS(cfg.validate(6), Error);
  cfg = ring_config();
  cfg.k_steps = 0;
  CHECK_THROWS_AS(cfg.validate(6), Error);
  cfg = ring_config();
  cfg.k_steps = 30;  // 100 not divisible by 30
  CHECK_THROWS_AS(cfg.validate(6), Error);
  cfg.mode = ScheduleMode::kGeometric;
  cfg.lambda_f = 0.01;
  CHECK_NOTHROW(cfg.validate(6));
}
