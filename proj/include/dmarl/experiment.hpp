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

#include <iosfwd>
#include <string>
#include <vector>

#include "dmarl/config.hpp"
#include "dmarl/gossip.hpp"
#include "dmarl/mdp.hpp"
#include "dmarl/metrics.hpp"
#include "dmarl/policy.hpp"

namespace dmarl::experiment {

/// Everything shared by the repetitions of one experiment.
struct Environment {
  mdp::MultiAgentMdp mdp;
  gossip::MixingMatrix w;
  policy::FeatureMap features;
  policy::JointSoftmaxPolicy initial;  // omega_0
  double j_star;
  int vi_sweeps;
  double lambda_f;  // schedule constant handed to NAC (0 for other algorithms)
};

Environment build_environment(const config::ExperimentConfig& cfg);

/// Repetition r runs with seed cfg.seed + r.
metrics::RunResult run_repetition(const config::ExperimentConfig& cfg, const Environment& env,
                                  int rep);

struct ExperimentResult {
  std::vector<metrics::RunResult> runs;
  double j_star = 0.0;
  double lambda_f = 0.0;
  bool any_aborted = false;
};

/// Runs every repetition and, when out_dir is nonempty, writes
///   config.txt, summary.txt, aggregate.csv, run_<r>.csv
/// plus omega_<r>.txt snapshots and aggregate.svg when enabled.
ExperimentResult run_experiment(const config::ExperimentConfig& cfg, const std::string& out_dir);

void write_run_csv(const metrics::RunResult& run, std::ostream& out);
void write_aggregate_csv(const std::vector<metrics::RunResult>& runs, std::ostream& out);
void write_svg(const std::vector<metrics::RunResult>& runs, double j_star, std::ostream& out);

/// Linear-interpolation percentile, p in [0, 1]. Sorts a copy.
double percentile(std::vector<double> values, double p);

/// J, grad_norm_sq and opt_gap re-derived from a logged parameter vector.
metrics::RunRecord oracle_metrics(const Environment& env, const Eigen::VectorXd& omega);

}  // namespace dmarl::experiment
