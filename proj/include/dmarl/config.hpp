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
#include <string>

#include "dmarl/ac.hpp"
#include "dmarl/dacrp.hpp"
#include "dmarl/mdp.hpp"
#include "dmarl/nac.hpp"

namespace dmarl::config {

enum class EnvKind { kRandom, kCliff };
enum class NetKind { kRing, kComplete };
enum class Algo { kAc, kNac, kDacRp };

/// Everything one experiment needs. Defaults reproduce the six-agent ring
/// setup with N = 100.
struct ExperimentConfig {
  EnvKind env = EnvKind::kRandom;
  mdp::RandomMdpSpec random;  // also supplies gamma for the cliff
  NetKind net = NetKind::kRing;
  double net_self = 0.4;
  double net_neighbor = 0.3;

  Algo algo = Algo::kAc;
  int reps = 10;
  std::uint64_t seed = 0;         // repetition r uses seed + r
  std::uint64_t policy_seed = 0;  // omega_0, shared by all repetitions
  int snapshot_every = 0;         // 0 disables omega snapshots
  bool svg = false;
  int threads = 1;

  double oracle_ridge = 1e-3;
  double vi_tolerance = 1e-10;

  // Shared by AC and NAC.
  critic::CriticConfig critic;
  double noise_sigma = 0.1;
  int noise_rounds = 5;  // T'
  bool strict_rounds = false;

  struct AcParams {
    double alpha = 10.0;
    int iterations = 500;
    int batch = 100;
  } ac;

  struct NacParams {
    double alpha = 0.1;
    int iterations = 2000;
    int batch = 100;
    double eta = 0.04;
    int k_steps = 50;
    int t_z = 5;
    nac::ScheduleMode schedule = nac::ScheduleMode::kConstant;
    double lambda_f = 0.0;  // 0 means: oracle lambda_F (with ridge) at omega_0
  } nac;

  dacrp::DacRpConfig dacrp;
  long long dacrp_feature_cap = dacrp::RewardFeatures::kDefaultCap;

  int num_agents() const;
  int num_states() const;
  int iterations() const;

  /// Driver configs for repetition seed `seed`.
  ac::AcConfig ac_config(std::uint64_t seed) const;
  nac::NacConfig nac_config(std::uint64_t seed, double lambda_f) const;
  dacrp::DacRpConfig dacrp_config(std::uint64_t seed) const;
  /// Structural checks that need no MDP; throws ErrorKind::kConfig.
  void validate() const;
};

/// Parses "key = value" lines ('#' starts a comment). Unknown or repeated
/// keys and malformed values throw ErrorKind::kConfig.
ExperimentConfig parse(std::istream& in);
ExperimentConfig parse_file(const std::string& path);

/// Canonical dump of every key, readable by parse().
void write(const ExperimentConfig& cfg, std::ostream& out);

const char* algo_name(Algo a);

}  // namespace dmarl::config
