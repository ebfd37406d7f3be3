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


#include <filesystem>
#include <sstream>
#include <string>

#include <doctest.h>

#include "dmarl/config.hpp"
#include "dmarl/error.hpp"

using namespace dmarl;
using namespace dmarl::config;

namespace {

ExperimentConfig parse_text(const std::string& s) {
  std::istringstream in(s);
  return parse(in);
}

ErrorKind kind_of(const std::string& s) {
  try {
    parse_text(s).validate();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected a config error for: " << s);
  return ErrorKind::kInvalidArgument;
}

}  // namespace

TEST_CASE("defaults follow the ring setup") {
  ExperimentConfig c = parse_text("");
  CHECK(c.env == EnvKind::kRandom);
  CHECK(c.random.num_states == 5);
  CHECK(c.random.num_agents == 6);
  CHECK(c.random.gamma == 0.95);
  CHECK(c.net_self == 0.4);
  CHECK(c.critic.beta == 0.5);
  CHECK(c.critic.t_c == 50);
  CHECK(c.critic.n_c == 10);
  CHECK(c.critic.t_c_prime == 10);
  CHECK(c.noise_rounds == 5);
  CHECK(c.nac.t_z == 5);
  CHECK(c.reps == 10);
  CHECK_NOTHROW(c.validate());
  auto ac = c.ac_config(3);
  CHECK(ac.seed == 3);
  CHECK(ac.rounds_per_iteration() == 65);
  CHECK(ac.noise.sigmas.size() == 6u);
}

TEST_CASE("keys, comments and whitespace") {
  auto c = parse_text(
      "# comment\n"
      "env.kind = cliff   # trailing comment\n"
      "  algo=nac\n"
      "\n"
      "nac.eta = 0.04\n"
      "nac.k = 200\n"
      "nac.batch = 2000\n"
      "nac.schedule = geometric\n"
      "nac.lambda_f = 0.5\n"
      "run.strict_rounds = true\n"
      "net.kind = complete\n");
  CHECK(c.env == EnvKind::kCliff);
  CHECK(c.algo == Algo::kNac);
  CHECK(c.nac.k_steps == 200);
  CHECK(c.nac.schedule == nac::ScheduleMode::kGeometric);
  CHECK(c.strict_rounds);
  CHECK(c.net == NetKind::kComplete);
  CHECK(c.num_agents() == 2);
  CHECK(c.num_states() == 144);
  CHECK_NOTHROW(c.validate());
  auto n = c.nac_config(0, 0.5);
  CHECK(n.base.strict_rounds);
  CHECK(n.schedule().size() == 200u);
}

TEST_CASE("dacrp variant is applied before the explicit keys") {
  auto c = parse_text("algo = dacrp\ndacrp.beta_theta = 3\ndacrp.variant = rp100\n");
  CHECK(c.dacrp.actor_batch == 100);
  CHECK(c.dacrp.critic_batch == 10);
  CHECK(c.dacrp.beta_theta.scale == 3.0);
  CHECK(c.dacrp.beta_v.scale == 0.5);
}

TEST_CASE("malformed configs are rejected") {
  CHECK(kind_of("bogus.key = 1\n") == ErrorKind::kConfig);
  CHECK(kind_of("ac.alpha = 1\nac.alpha = 2\n") == ErrorKind::kConfig);
  CHECK(kind_of("ac.alpha =\n") == ErrorKind::kConfig);
  CHECK(kind_of("ac.alpha = ten\n") == ErrorKind::kConfig);
  CHECK(kind_of("ac.iterations = 1.5\n") == ErrorKind::kConfig);
  CHECK(kind_of("no equals sign\n") == ErrorKind::kConfig);
  CHECK(kind_of("run.reps = 0\n") == ErrorKind::kConfig);
  CHECK(kind_of("env.gamma = 1\n") == ErrorKind::kConfig);
  CHECK(kind_of("net.self = 0.5\n") == ErrorKind::kConfig);
  CHECK(kind_of("algo = nac\nnac.k = 30\n") == ErrorKind::kConfig);
  CHECK(kind_of("env.kind = cliff\nalgo = dacrp\n") == ErrorKind::kConfig);
  CHECK(kind_of("critic.beta = -1\n") == ErrorKind::kConfig);
  CHECK(kind_of("env.kind = maze\n") == ErrorKind::kConfig);
  CHECK_THROWS_AS(parse_file("/nonexistent/dir/x.cfg"), Error);
}

TEST_CASE("canonical dump round trips") {
  auto c = parse_text("env.seed = 4\nac.alpha = 0.125\nalgo = nac\nnac.eta = 0.3\nrun.svg = true\n");
  std::ostringstream a;
  write(c, a);
  auto back = parse_text(a.str());
  std::ostringstream b;
  write(back, b);
  CHECK(a.str() == b.str());
  CHECK(back.ac.alpha == 0.125);
  CHECK(back.algo == Algo::kNac);
  CHECK(back.svg);
}

TEST_CASE("shipped configs validate") {
  const std::filesystem::path dir = std::filesystem::path(DMARL_SOURCE_DIR) / "configs";
  int count = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().extension() != ".cfg") continue;
    CAPTURE(e.path().string());
    CHECK_NOTHROW(parse_file(e.path().string()).validate());
    ++count;
  }
  CHECK(count >= 7);
}
