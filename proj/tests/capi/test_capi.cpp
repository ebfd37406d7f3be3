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
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "dmarl/dmarl.h"

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("dmarl_capi_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string write_config(const fs::path& dir, const std::string& body) {
  const fs::path p = dir / "run.cfg";
  std::ofstream(p) << body;
  return p.string();
}

}  // namespace

TEST_CASE("version and status names") {
  CHECK(std::string(dmarl_version()).size() > 0);
  CHECK(std::string(dmarl_status_name(DMARL_OK)) == "ok");
  CHECK(std::string(dmarl_status_name(DMARL_ERR_DIVERGED)) == "diverged");
  CHECK(std::string(dmarl_status_name(static_cast<dmarl_status>(99))) == "unknown status");
}

TEST_CASE("mixing matrices and gossip") {
  dmarl_mixing* ring = nullptr;
  REQUIRE(dmarl_mixing_ring(6, 0.4, 0.3, &ring) == DMARL_OK);
  double sigma = 0.0;
  CHECK(dmarl_mixing_sigma(ring, &sigma) == DMARL_OK);
  CHECK(std::abs(sigma - 0.7) <= 1e-10);

  std::vector<double> values{1, 10, 2, 20, 3, 30, 4, 40, 5, 50, 6, 60};  // 6 x 2, row major
  CHECK(dmarl_gossip(ring, values.data(), 2, 200) == DMARL_OK);
  for (int m = 0; m < 6; ++m) {
    CHECK(values[2 * m] == doctest::Approx(3.5));
    CHECK(values[2 * m + 1] == doctest::Approx(35.0));
  }
  CHECK(dmarl_gossip(ring, values.data(), 2, -1) == DMARL_ERR_INVALID_ARGUMENT);
  CHECK(dmarl_gossip(ring, nullptr, 2, 1) == DMARL_ERR_INVALID_ARGUMENT);
  dmarl_mixing_free(ring);

  dmarl_mixing* bad = nullptr;
  CHECK(dmarl_mixing_ring(6, 0.5, 0.3, &bad) == DMARL_ERR_INVALID_ARGUMENT);
  CHECK(bad == nullptr);
  CHECK(std::string(dmarl_last_error()).size() > 0);

  const double avg[4] = {0.5, 0.5, 0.5, 0.5};
  dmarl_mixing* w = nullptr;
  REQUIRE(dmarl_mixing_from_weights(2, avg, &w) == DMARL_OK);
  CHECK(dmarl_mixing_sigma(w, &sigma) == DMARL_OK);
  CHECK(sigma <= 1e-12);
  dmarl_mixing_free(w);
  dmarl_mixing* full = nullptr;
  REQUIRE(dmarl_mixing_complete(6, 0.4, &full) == DMARL_OK);
  CHECK(dmarl_mixing_sigma(full, &sigma) == DMARL_OK);
  CHECK(std::abs(sigma - 0.28) <= 1e-10);
  dmarl_mixing_free(full);
  dmarl_mixing_free(nullptr);
}

TEST_CASE("environments and policies") {
  dmarl_mdp* cliff = nullptr;
  REQUIRE(dmarl_mdp_cliff(0.95, &cliff) == DMARL_OK);
  int s = 0, m = 0, a = 0;
  CHECK(dmarl_mdp_dims(cliff, &s, &m, &a) == DMARL_OK);
  CHECK(s == 144);
  CHECK(m == 2);
  CHECK(a == 16);
  double j_star = 0.0;
  CHECK(dmarl_mdp_optimal_value(cliff, 1e-10, &j_star) == DMARL_OK);
  CHECK(std::abs(j_star + 0.1855) <= 5e-4);
  dmarl_mdp_free(cliff);

  dmarl_mdp* mdp = nullptr;
  REQUIRE(dmarl_mdp_random(1, 5, 6, 2, 0.95, &mdp) == DMARL_OK);
  dmarl_policy* pi = nullptr;
  REQUIRE(dmarl_policy_gaussian(mdp, 7, &pi) == DMARL_OK);
  size_t n = 0;
  CHECK(dmarl_policy_dim(pi, &n) == DMARL_OK);
  CHECK(n == 60u);
  std::vector<double> params(n), grad(n);
  CHECK(dmarl_policy_params(pi, params.data(), n) == DMARL_OK);
  CHECK(dmarl_policy_params(pi, params.data(), n - 1) == DMARL_ERR_INVALID_ARGUMENT);
  double j = 0.0;
  CHECK(dmarl_policy_objective(mdp, pi, &j) == DMARL_OK);
  CHECK(dmarl_policy_gradient(mdp, pi, grad.data(), n) == DMARL_OK);

  // central difference along the first coordinate, through the C API only
  const double h = 1e-6;
  std::vector<double> p = params;
  p[0] += h;
  dmarl_policy* plus = nullptr;
  REQUIRE(dmarl_policy_from_params(mdp, p.data(), n, &plus) == DMARL_OK);
  p[0] -= 2 * h;
  dmarl_policy* minus = nullptr;
  REQUIRE(dmarl_policy_from_params(mdp, p.data(), n, &minus) == DMARL_OK);
  double jp = 0.0, jm = 0.0;
  dmarl_policy_objective(mdp, plus, &jp);
  dmarl_policy_objective(mdp, minus, &jm);
  CHECK((jp - jm) / (2 * h) == doctest::Approx(grad[0]).epsilon(1e-5));
  dmarl_policy_free(plus);
  dmarl_policy_free(minus);

  p[0] = NAN;
  dmarl_policy* broken = nullptr;
  CHECK(dmarl_policy_from_params(mdp, p.data(), n, &broken) == DMARL_ERR_INVALID_ARGUMENT);
  CHECK(dmarl_policy_from_params(mdp, p.data(), n - 2, &broken) == DMARL_ERR_INVALID_ARGUMENT);

  auto dir = scratch("mdp");
  const std::string path = (dir / "mdp.txt").string();
  CHECK(dmarl_mdp_write(mdp, path.c_str()) == DMARL_OK);
  dmarl_mdp* back = nullptr;
  REQUIRE(dmarl_mdp_read(path.c_str(), &back) == DMARL_OK);
  double j_back = 0.0;
  CHECK(dmarl_policy_objective(back, pi, &j_back) == DMARL_OK);
  CHECK(j_back == j);
  CHECK(dmarl_mdp_read((dir / "missing.txt").string().c_str(), &back) == DMARL_ERR_IO);
  dmarl_mdp_free(back);
  dmarl_policy_free(pi);
  dmarl_mdp_free(mdp);
  fs::remove_all(dir);

  CHECK(dmarl_mdp_random(1, 0, 6, 2, 0.95, &mdp) == DMARL_ERR_INVALID_ARGUMENT);
  CHECK(dmarl_mdp_dims(nullptr, &s, &m, &a) == DMARL_ERR_INVALID_ARGUMENT);
}

TEST_CASE("config driven runs") {
  auto dir = scratch("run");
  dmarl_run_options opt;
  dmarl_run_options_init(&opt);
  CHECK(opt.config_path == nullptr);
  CHECK(dmarl_validate_config(&opt) == DMARL_ERR_INVALID_ARGUMENT);

  const std::string cfg = write_config(dir, "ac.iterations = 3\nrun.reps = 2\nrun.seed = 5\n");
  opt.config_path = cfg.c_str();
  CHECK(dmarl_validate_config(&opt) == DMARL_OK);
  const std::string out = (dir / "out").string();
  opt.out_dir = out.c_str();
  opt.reps = 1;
  opt.override_seed = 1;
  opt.seed = 9;
  opt.strict_rounds = 1;
  REQUIRE(dmarl_run_experiment(&opt) == DMARL_OK);
  CHECK(fs::exists(dir / "out" / "run_000.csv"));
  CHECK(!fs::exists(dir / "out" / "run_001.csv"));
  std::ifstream summary(dir / "out" / "summary.txt");
  std::string all((std::istreambuf_iterator<char>(summary)), std::istreambuf_iterator<char>());
  CHECK(all.find("run.000.seed = 9") != std::string::npos);
  std::ifstream csv(dir / "out" / "run_000.csv");
  std::string line, last;
  while (std::getline(csv, line)) last = line;
  CHECK(last.rfind("3,1800,", 0) == 0);
  CHECK(last.find(",1680,") != std::string::npos);  // 3 * (50 + 10 + 100 * 5)

  opt.algo = "dacrp";
  CHECK(dmarl_run_experiment(&opt) == DMARL_OK);
  opt.algo = "sarsa";
  CHECK(dmarl_run_experiment(&opt) == DMARL_ERR_CONFIG);
  opt.algo = nullptr;

  const std::string oracle_dir = (dir / "oracle").string();
  opt.out_dir = oracle_dir.c_str();
  CHECK(dmarl_oracle_dump(&opt) == DMARL_OK);
  std::ifstream oracle(dir / "oracle" / "oracle.txt");
  std::getline(oracle, line);
  CHECK(line.rfind("j_star ", 0) == 0);
  CHECK(fs::exists(dir / "oracle" / "mdp.txt"));

  const std::string bad = write_config(dir, "ac.alpha = fast\n");
  opt.config_path = bad.c_str();
  CHECK(dmarl_validate_config(&opt) == DMARL_ERR_CONFIG);
  CHECK(dmarl_run_experiment(&opt) == DMARL_ERR_CONFIG);
  CHECK(std::string(dmarl_last_error()).find("ac.alpha") != std::string::npos);
  const std::string missing = (dir / "nope.cfg").string();
  opt.config_path = missing.c_str();
  CHECK(dmarl_validate_config(&opt) == DMARL_ERR_CONFIG);
  fs::remove_all(dir);
}
