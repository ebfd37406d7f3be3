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

// Command-line front end. Talks to the library only through dmarl.h.

#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dmarl/dmarl.h"

namespace {

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int reps = 0;
  bool strict_rounds = false;
};

void add_flags(CLI::App* cmd, Flags& f, bool run_flags) {
  cmd->add_option("--config", f.config, "key=value experiment file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", f.out, "output directory");
  if (!run_flags) return;
  cmd->add_option("--seed", f.seed, "base seed; repetition r uses seed + r");
  cmd->add_option("--reps", f.reps, "number of repetitions")->check(CLI::PositiveNumber);
  cmd->add_flag("--strict-rounds", f.strict_rounds, "count reward and z rounds per scalar / per SGD step");
}

int exit_code(dmarl_status s) {
  switch (s) {
    case DMARL_OK: return 0;
    case DMARL_ERR_CONFIG: return 2;
    case DMARL_ERR_DIVERGED: return 3;
    default: return 1;
  }
}

int report(dmarl_status s) {
  if (s != DMARL_OK) std::fprintf(stderr, "dmarl: %s: %s\n", dmarl_status_name(s), dmarl_last_error());
  return exit_code(s);
}

dmarl_run_options to_options(const Flags& f, const char* algo) {
  dmarl_run_options o;
  dmarl_run_options_init(&o);
  o.config_path = f.config.c_str();
  o.out_dir = f.out.empty() ? nullptr : f.out.c_str();
  o.algo = algo;
  if (f.seed) {
    o.override_seed = 1;
    o.seed = *f.seed;
  }
  o.reps = f.reps;
  o.strict_rounds = f.strict_rounds ? 1 : 0;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized multi-agent actor-critic simulator"};
  app.set_version_flag("--version", dmarl_version());
  app.require_subcommand(1);

  Flags ac_f, nac_f, rp_f, oracle_f, check_f;
  auto* ac = app.add_subcommand("run-ac", "decentralized actor-critic");
  auto* nac = app.add_subcommand("run-nac", "decentralized natural actor-critic");
  auto* rp = app.add_subcommand("run-dacrp", "actor-critic with a learned reward model (baseline)");
  auto* oracle = app.add_subcommand("oracle", "dump the MDP and exact quantities at omega_0");
  auto* check = app.add_subcommand("validate-config", "parse and check a config file");
  add_flags(ac, ac_f, true);
  add_flags(nac, nac_f, true);
  add_flags(rp, rp_f, true);
  add_flags(oracle, oracle_f, true);
  add_flags(check, check_f, true);

  CLI11_PARSE(app, argc, argv);

  if (ac->parsed()) {
    const auto o = to_options(ac_f, "ac");
    return report(dmarl_run_experiment(&o));
  }
  if (nac->parsed()) {
    const auto o = to_options(nac_f, "nac");
    return report(dmarl_run_experiment(&o));
  }
  if (rp->parsed()) {
    const auto o = to_options(rp_f, "dacrp");
    return report(dmarl_run_experiment(&o));
  }
  if (oracle->parsed()) {
    if (oracle_f.out.empty()) oracle_f.out = ".";
    const auto o = to_options(oracle_f, nullptr);
    return report(dmarl_oracle_dump(&o));
  }
  const auto o = to_options(check_f, nullptr);
  const dmarl_status s = dmarl_validate_config(&o);
  if (s == DMARL_OK) std::printf("config ok\n");
  return report(s);
}
