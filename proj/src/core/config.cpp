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

#include "dmarl/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

#include "dmarl/error.hpp"
#include "dmarl/gossip.hpp"
#include "dmarl/text_io.hpp"

namespace dmarl::config {

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& msg) {
  fail(ErrorKind::kConfig, key + ": " + msg);
}

template <typename T>
T parse_integer(const std::string& key, const std::string& v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad(key, "expected an integer, got '" + v + "'");
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  std::istringstream in(v);
  double out = 0.0;
  in >> out;
  if (!in || !in.eof() || !std::isfinite(out)) bad(key, "expected a finite number, got '" + v + "'");
  return out;
}

bool parse_flag(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad(key, "expected true or false, got '" + v + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Key {
  std::string name;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

std::string str(double x) { return text::format_double(x); }
std::string str(long long x) { return std::to_string(x); }
std::string str(int x) { return std::to_string(x); }
std::string str(std::uint64_t x) { return std::to_string(x); }
std::string str(bool x) { return x ? "true" : "false"; }

#define DMARL_INT(NAME, FIELD)                                                                 \
  Key{NAME, [](ExperimentConfig& c, const std::string& v) { c.FIELD = parse_integer<int>(NAME, v); }, \
      [](const ExperimentConfig& c) { return str(c.FIELD); }}
#define DMARL_U64(NAME, FIELD)                                                         \
  Key{NAME,                                                                            \
      [](ExperimentConfig& c, const std::string& v) {                                  \
        c.FIELD = parse_integer<std::uint64_t>(NAME, v);                               \
      },                                                                               \
      [](const ExperimentConfig& c) { return str(c.FIELD); }}
#define DMARL_REAL(NAME, FIELD)                                                                \
  Key{NAME, [](ExperimentConfig& c, const std::string& v) { c.FIELD = parse_real(NAME, v); }, \
      [](const ExperimentConfig& c) { return str(c.FIELD); }}
#define DMARL_FLAG(NAME, FIELD)                                                                \
  Key{NAME, [](ExperimentConfig& c, const std::string& v) { c.FIELD = parse_flag(NAME, v); }, \
      [](const ExperimentConfig& c) { return str(c.FIELD); }}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      Key{"env.kind",
          [](ExperimentConfig& c, const std::string& v) {
            if (v == "random") c.env = EnvKind::kRandom;
            else if (v == "cliff") c.env = EnvKind::kCliff;
            else bad("env.kind", "expected random or cliff");
          },
          [](const ExperimentConfig& c) {
            return std::string(c.env == EnvKind::kRandom ? "random" : "cliff");
          }},
      DMARL_U64("env.seed", random.seed),
      DMARL_INT("env.states", random.num_states),
      DMARL_INT("env.agents", random.num_agents),
      DMARL_INT("env.actions", random.actions_per_agent),
      DMARL_REAL("env.gamma", random.gamma),
      DMARL_INT("env.initial_state", random.initial_state),
      DMARL_FLAG("env.rescale", random.rescale_rewards),
      Key{"net.kind",
          [](ExperimentConfig& c, const std::string& v) {
            if (v == "ring") c.net = NetKind::kRing;
            else if (v == "complete") c.net = NetKind::kComplete;
            else bad("net.kind", "expected ring or complete");
          },
          [](const ExperimentConfig& c) {
            return std::string(c.net == NetKind::kRing ? "ring" : "complete");
          }},
      DMARL_REAL("net.self", net_self),
      DMARL_REAL("net.neighbor", net_neighbor),
      Key{"algo",
          [](ExperimentConfig& c, const std::string& v) {
            if (v == "ac") c.algo = Algo::kAc;
            else if (v == "nac") c.algo = Algo::kNac;
            else if (v == "dacrp") c.algo = Algo::kDacRp;
            else bad("algo", "expected ac, nac or dacrp");
          },
          [](const ExperimentConfig& c) { return std::string(algo_name(c.algo)); }},
      DMARL_INT("run.reps", reps),
      DMARL_U64("run.seed", seed),
      DMARL_U64("run.policy_seed", policy_seed),
      DMARL_INT("run.snapshot_every", snapshot_every),
      DMARL_FLAG("run.svg", svg),
      DMARL_INT("run.threads", threads),
      DMARL_FLAG("run.strict_rounds", strict_rounds),
      DMARL_REAL("oracle.ridge", oracle_ridge),
      DMARL_REAL("oracle.vi_tolerance", vi_tolerance),
      DMARL_REAL("critic.beta", critic.beta),
      DMARL_INT("critic.t_c", critic.t_c),
      DMARL_INT("critic.n_c", critic.n_c),
      DMARL_INT("critic.t_c_prime", critic.t_c_prime),
      DMARL_FLAG("critic.warm_start", critic.warm_start),
      DMARL_REAL("noise.sigma", noise_sigma),
      DMARL_INT("noise.rounds", noise_rounds),
      DMARL_REAL("ac.alpha", ac.alpha),
      DMARL_INT("ac.iterations", ac.iterations),
      DMARL_INT("ac.batch", ac.batch),
      DMARL_REAL("nac.alpha", nac.alpha),
      DMARL_INT("nac.iterations", nac.iterations),
      DMARL_INT("nac.batch", nac.batch),
      DMARL_REAL("nac.eta", nac.eta),
      DMARL_INT("nac.k", nac.k_steps),
      DMARL_INT("nac.t_z", nac.t_z),
      Key{"nac.schedule",
          [](ExperimentConfig& c, const std::string& v) {
            if (v == "constant") c.nac.schedule = nac::ScheduleMode::kConstant;
            else if (v == "geometric") c.nac.schedule = nac::ScheduleMode::kGeometric;
            else bad("nac.schedule", "expected constant or geometric");
          },
          [](const ExperimentConfig& c) {
            return std::string(c.nac.schedule == nac::ScheduleMode::kConstant ? "constant"
                                                                             : "geometric");
          }},
      DMARL_REAL("nac.lambda_f", nac.lambda_f),
      Key{"dacrp.variant",
          [](ExperimentConfig& c, const std::string& v) {
            const int iterations = c.dacrp.iterations;
            if (v == "rp1") c.dacrp = dacrp::DacRpConfig::rp1();
            else if (v == "rp100") c.dacrp = dacrp::DacRpConfig::rp100();
            else bad("dacrp.variant", "expected rp1 or rp100");
            c.dacrp.iterations = iterations;
          },
          // The preset is folded into the explicit keys below.
          [](const ExperimentConfig&) { return std::string(); }},
      DMARL_INT("dacrp.iterations", dacrp.iterations),
      DMARL_INT("dacrp.actor_batch", dacrp.actor_batch),
      DMARL_INT("dacrp.critic_batch", dacrp.critic_batch),
      DMARL_REAL("dacrp.beta_v", dacrp.beta_v.scale),
      DMARL_REAL("dacrp.beta_v_power", dacrp.beta_v.power),
      DMARL_REAL("dacrp.beta_theta", dacrp.beta_theta.scale),
      DMARL_REAL("dacrp.beta_theta_power", dacrp.beta_theta.power),
      Key{"dacrp.feature_cap",
          [](ExperimentConfig& c, const std::string& v) {
            c.dacrp_feature_cap = parse_integer<long long>("dacrp.feature_cap", v);
          },
          [](const ExperimentConfig& c) { return str(c.dacrp_feature_cap); }},
  };
  return table;
}

#undef DMARL_INT
#undef DMARL_U64
#undef DMARL_REAL
#undef DMARL_FLAG

// Keys that reset other keys are applied first.
bool applied_first(const std::string& key) { return key == "dacrp.variant"; }

}  // namespace

const char* algo_name(Algo a) {
  switch (a) {
    case Algo::kAc: return "ac";
    case Algo::kNac: return "nac";
    case Algo::kDacRp: return "dacrp";
  }
  return "?";
}

int ExperimentConfig::num_agents() const {
  return env == EnvKind::kCliff ? 2 : random.num_agents;
}

int ExperimentConfig::num_states() const {
  return env == EnvKind::kCliff ? mdp::cliff::kCells * mdp::cliff::kCells : random.num_states;
}

int ExperimentConfig::iterations() const {
  switch (algo) {
    case Algo::kAc: return ac.iterations;
    case Algo::kNac: return nac.iterations;
    case Algo::kDacRp: return dacrp.iterations;
  }
  return 0;
}

ac::AcConfig ExperimentConfig::ac_config(std::uint64_t run_seed) const {
  ac::AcConfig out;
  out.alpha = ac.alpha;
  out.iterations = ac.iterations;
  out.batch = ac.batch;
  out.noise = gossip::NoiseConfig::uniform(num_agents(), noise_sigma, noise_rounds);
  out.critic = critic;
  out.seed = run_seed;
  out.strict_rounds = strict_rounds;
  return out;
}

nac::NacConfig ExperimentConfig::nac_config(std::uint64_t run_seed, double lambda_f) const {
  nac::NacConfig out;
  out.base = ac_config(run_seed);
  out.base.alpha = nac.alpha;
  out.base.iterations = nac.iterations;
  out.base.batch = nac.batch;
  out.eta = nac.eta;
  out.k_steps = nac.k_steps;
  out.t_z = nac.t_z;
  out.lambda_f = lambda_f;
  out.mode = nac.schedule;
  return out;
}

dacrp::DacRpConfig ExperimentConfig::dacrp_config(std::uint64_t run_seed) const {
  dacrp::DacRpConfig out = dacrp;
  out.seed = run_seed;
  return out;
}

void ExperimentConfig::validate() const {
  auto check = [](bool ok, const std::string& msg) {
    if (!ok) fail(ErrorKind::kConfig, msg);
  };
  check(reps >= 1, "run.reps must be at least 1");
  check(threads >= 1, "run.threads must be at least 1");
  check(snapshot_every >= 0, "run.snapshot_every must be nonnegative");
  check(random.gamma > 0.0 && random.gamma < 1.0, "env.gamma must lie in (0, 1)");
  if (env == EnvKind::kRandom) {
    check(random.num_states >= 1 && random.num_agents >= 1 && random.actions_per_agent >= 1,
          "env.states, env.agents and env.actions must be positive");
    check(random.initial_state >= 0 && random.initial_state < random.num_states,
          "env.initial_state out of range");
  }
  check(oracle_ridge >= 0.0, "oracle.ridge must be nonnegative");
  check(vi_tolerance > 0.0, "oracle.vi_tolerance must be positive");
  check(noise_sigma >= 0.0, "noise.sigma must be nonnegative");
  check(nac.lambda_f >= 0.0, "nac.lambda_f must be nonnegative");
  check(dacrp_feature_cap >= 1, "dacrp.feature_cap must be positive");
  if (algo == Algo::kDacRp) {
    const long long joint = env == EnvKind::kCliff ? 16 : static_cast<long long>(std::pow(
                                                              random.actions_per_agent, random.num_agents));
    const long long d = static_cast<long long>(num_states()) * num_states() * joint;
    check(d <= dacrp_feature_cap, "dacrp: identity triplet features need " + std::to_string(d) +
                                      " dimensions, above dacrp.feature_cap = " +
                                      std::to_string(dacrp_feature_cap));
  }
  // Driver-level checks, reported as configuration errors.
  try {
    if (net == NetKind::kRing) gossip::MixingMatrix::ring(num_agents(), net_self, net_neighbor);
    else gossip::MixingMatrix::complete(num_agents(), net_self);
    critic.validate();
    ac_config(seed).validate(num_agents());
    if (algo == Algo::kNac) {
      nac::NacConfig n = nac_config(seed, nac.lambda_f > 0.0 ? nac.lambda_f : 1e-3);
      n.validate(num_agents());
    }
    dacrp.validate();
  } catch (const Error& e) {
    fail(ErrorKind::kConfig, e.what());
  }
}

ExperimentConfig parse(std::istream& in) {
  std::map<std::string, const Key*> index;
  for (const Key& k : keys()) index[k.name] = &k;

  std::vector<std::pair<const Key*, std::string>> early;
  std::vector<std::pair<const Key*, std::string>> late;
  std::map<std::string, int> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorKind::kConfig, "line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = index.find(key);
    if (it == index.end()) fail(ErrorKind::kConfig, "line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (seen.count(key)) {
      fail(ErrorKind::kConfig, "line " + std::to_string(lineno) + ": key '" + key +
                                   "' repeats line " + std::to_string(seen[key]));
    }
    seen[key] = lineno;
    if (value.empty()) fail(ErrorKind::kConfig, "line " + std::to_string(lineno) + ": empty value");
    (applied_first(key) ? early : late).emplace_back(it->second, value);
  }
  ExperimentConfig cfg;
  for (const auto& [k, v] : early) k->set(cfg, v);
  for (const auto& [k, v] : late) k->set(cfg, v);
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kConfig, "cannot open config file '" + path + "'");
  return parse(in);
}

void write(const ExperimentConfig& cfg, std::ostream& out) {
  for (const Key& k : keys()) {
    const std::string v = k.get(cfg);
    if (!v.empty()) out << k.name << " = " << v << '\n';
  }
}

}  // namespace dmarl::config
