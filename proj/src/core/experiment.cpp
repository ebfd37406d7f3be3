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

#include "dmarl/experiment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

#include "dmarl/ac.hpp"
#include "dmarl/dacrp.hpp"
#include "dmarl/error.hpp"
#include "dmarl/nac.hpp"
#include "dmarl/oracle.hpp"
#include "dmarl/text_io.hpp"

namespace dmarl::experiment {

namespace {

using text::format_double;

mdp::MultiAgentMdp make_mdp(const config::ExperimentConfig& cfg) {
  if (cfg.env == config::EnvKind::kCliff) return mdp::build_cliff_navigation(cfg.random.gamma);
  return mdp::generate_random_mdp(cfg.random);
}

gossip::MixingMatrix make_mixing(const config::ExperimentConfig& cfg) {
  if (cfg.net == config::NetKind::kComplete) {
    return gossip::MixingMatrix::complete(cfg.num_agents(), cfg.net_self);
  }
  return gossip::MixingMatrix::ring(cfg.num_agents(), cfg.net_self, cfg.net_neighbor);
}

std::string optional_field(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out << body;
  if (!out) fail(ErrorKind::kIo, "write failed for " + path.string());
}

std::string run_name(int r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%03d", r);
  return buf;
}

}  // namespace

Environment build_environment(const config::ExperimentConfig& cfg) {
  cfg.validate();
  mdp::MultiAgentMdp m = make_mdp(cfg);
  gossip::MixingMatrix w = make_mixing(cfg);
  policy::FeatureMap features = policy::build_identity_features(m.num_states());
  Rng policy_rng(cfg.policy_seed);
  policy::JointSoftmaxPolicy initial =
      policy::JointSoftmaxPolicy::gaussian(m.num_states(), m.action_counts(), policy_rng);
  const oracle::OptimalValue best = oracle::optimal_joint_value(m, cfg.vi_tolerance);
  double lambda_f = 0.0;
  if (cfg.algo == config::Algo::kNac) {
    lambda_f = cfg.nac.lambda_f > 0.0
                   ? cfg.nac.lambda_f
                   : oracle::fisher_and_natural_gradient(m, initial, cfg.oracle_ridge).lambda_f_effective;
  }
  return Environment{std::move(m), std::move(w),   std::move(features), std::move(initial),
                     best.j_star,  best.sweeps,    lambda_f};
}

metrics::RunResult run_repetition(const config::ExperimentConfig& cfg, const Environment& env,
                                  int rep) {
  const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(rep);
  const metrics::Recorder recorder(env.mdp, env.features, env.j_star, nullptr);
  switch (cfg.algo) {
    case config::Algo::kAc:
      return ac::run_ac(env.mdp, env.w, env.features, cfg.ac_config(seed), env.initial, recorder);
    case config::Algo::kNac:
      return nac::run_nac(env.mdp, env.w, env.features, cfg.nac_config(seed, env.lambda_f),
                          env.initial, recorder);
    case config::Algo::kDacRp: {
      const auto rf = dacrp::RewardFeatures::identity_triplets(env.mdp, cfg.dacrp_feature_cap);
      return dacrp::run_dacrp(env.mdp, env.w, env.features, rf, cfg.dacrp_config(seed),
                              env.initial, recorder);
    }
  }
  fail(ErrorKind::kInvalidArgument, "unknown algorithm");
}

double percentile(std::vector<double> values, double p) {
  require(!values.empty(), "percentile of an empty sample");
  require(p >= 0.0 && p <= 1.0, "percentile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

void write_run_csv(const metrics::RunResult& run, std::ostream& out) {
  out << "iter,samples,comm_rounds,J,grad_norm_sq,opt_gap,td_rel_err,reward_rel_err,extra\n";
  for (const auto& r : run.records) {
    out << r.iter << ',' << r.samples << ',' << r.comm_rounds << ',' << format_double(r.j) << ','
        << format_double(r.grad_norm_sq) << ',' << format_double(r.opt_gap) << ','
        << optional_field(r.td_rel_err) << ',' << optional_field(r.reward_rel_err) << ','
        << optional_field(r.extra) << '\n';
  }
}

void write_aggregate_csv(const std::vector<metrics::RunResult>& runs, std::ostream& out) {
  out << "iter,samples,comm_rounds,runs,J_median,J_p05,J_p95,grad_norm_sq_median,"
         "grad_norm_sq_p05,grad_norm_sq_p95\n";
  std::size_t longest = 0;
  for (const auto& r : runs) longest = std::max(longest, r.records.size());
  for (std::size_t t = 0; t < longest; ++t) {
    std::vector<double> j;
    std::vector<double> g;
    const metrics::RunRecord* first = nullptr;
    for (const auto& r : runs) {
      if (t >= r.records.size()) continue;
      if (!first) first = &r.records[t];
      j.push_back(r.records[t].j);
      g.push_back(r.records[t].grad_norm_sq);
    }
    out << first->iter << ',' << first->samples << ',' << first->comm_rounds << ',' << j.size();
    for (const auto* v : {&j, &g}) {
      for (double p : {0.5, 0.05, 0.95}) out << ',' << format_double(percentile(*v, p));
    }
    out << '\n';
  }
}

void write_svg(const std::vector<metrics::RunResult>& runs, double j_star, std::ostream& out) {
  constexpr double kW = 640.0, kH = 400.0, kPad = 48.0;
  std::vector<std::array<double, 3>> bands;
  std::size_t longest = 0;
  for (const auto& r : runs) longest = std::max(longest, r.records.size());
  double lo = j_star, hi = j_star;
  for (std::size_t t = 0; t < longest; ++t) {
    std::vector<double> j;
    for (const auto& r : runs) {
      if (t < r.records.size()) j.push_back(r.records[t].j);
    }
    bands.push_back({percentile(j, 0.05), percentile(j, 0.5), percentile(j, 0.95)});
    lo = std::min(lo, bands.back()[0]);
    hi = std::max(hi, bands.back()[2]);
  }
  if (hi - lo < 1e-12) hi = lo + 1.0;
  const double n = static_cast<double>(std::max<std::size_t>(longest, 2) - 1);
  auto x = [&](std::size_t t) { return kPad + (kW - 2 * kPad) * static_cast<double>(t) / n; };
  auto y = [&](double v) { return kH - kPad - (kH - 2 * kPad) * (v - lo) / (hi - lo); };
  char buf[64];
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\">\n";
  out << "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
  const char* colors[] = {"#9ecae1", "#08519c", "#9ecae1"};
  for (int k = 0; k < 3; ++k) {
    out << "<polyline fill=\"none\" stroke=\"" << colors[k] << "\" points=\"";
    for (std::size_t t = 0; t < bands.size(); ++t) {
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", x(t), y(bands[t][static_cast<std::size_t>(k)]));
      out << buf;
    }
    out << "\"/>\n";
  }
  std::snprintf(buf, sizeof buf, "%.2f", y(j_star));
  out << "<line x1=\"" << kPad << "\" x2=\"" << kW - kPad << "\" y1=\"" << buf << "\" y2=\"" << buf
      << "\" stroke=\"#a50f15\" stroke-dasharray=\"4 3\"/>\n";
  out << "<text x=\"" << kPad << "\" y=\"24\" font-size=\"12\">J (median, 5-95%) vs iteration; "
      << "dashed: J*</text>\n</svg>\n";
}

metrics::RunRecord oracle_metrics(const Environment& env, const Eigen::VectorXd& omega) {
  const auto pi = policy::JointSoftmaxPolicy::unflatten(env.mdp.num_states(),
                                                        env.mdp.action_counts(), omega);
  const oracle::ObjectiveGradient og = oracle::objective_and_gradient(env.mdp, pi);
  metrics::RunRecord r;
  r.j = og.j;
  r.grad_norm_sq = og.grad.squaredNorm();
  r.opt_gap = env.j_star - og.j;
  return r;
}

ExperimentResult run_experiment(const config::ExperimentConfig& cfg, const std::string& out_dir) {
  const Environment env = build_environment(cfg);
  ExperimentResult result;
  result.j_star = env.j_star;
  result.lambda_f = env.lambda_f;
  result.runs.resize(static_cast<std::size_t>(cfg.reps));

  // Repetitions are independent; results land in their own slot so the
  // output never depends on scheduling.
  for (int start = 0; start < cfg.reps; start += cfg.threads) {
    const int stop = std::min(cfg.reps, start + cfg.threads);
    std::vector<std::future<metrics::RunResult>> jobs;
    for (int r = start + 1; r < stop; ++r) {
      jobs.push_back(std::async(std::launch::async, [&cfg, &env, r] { return run_repetition(cfg, env, r); }));
    }
    result.runs[static_cast<std::size_t>(start)] = run_repetition(cfg, env, start);
    for (int r = start + 1; r < stop; ++r) {
      result.runs[static_cast<std::size_t>(r)] = jobs[static_cast<std::size_t>(r - start - 1)].get();
    }
  }
  for (const auto& r : result.runs) result.any_aborted = result.any_aborted || r.aborted;
  if (out_dir.empty()) return result;

  namespace fs = std::filesystem;
  const fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::kIo, "cannot create output directory " + out_dir + ": " + ec.message());

  std::ostringstream conf;
  config::write(cfg, conf);
  write_file(dir / "config.txt", conf.str());

  for (int r = 0; r < cfg.reps; ++r) {
    const auto& run = result.runs[static_cast<std::size_t>(r)];
    std::ostringstream csv;
    write_run_csv(run, csv);
    write_file(dir / ("run_" + run_name(r) + ".csv"), csv.str());
    if (cfg.snapshot_every > 0) {
      std::ostringstream snap;
      for (std::size_t t = 0; t < run.iterates.size(); t += static_cast<std::size_t>(cfg.snapshot_every)) {
        snap << t;
        for (Eigen::Index i = 0; i < run.iterates[t].size(); ++i) snap << ' ' << format_double(run.iterates[t](i));
        snap << '\n';
      }
      write_file(dir / ("omega_" + run_name(r) + ".txt"), snap.str());
    }
  }

  std::ostringstream agg;
  write_aggregate_csv(result.runs, agg);
  write_file(dir / "aggregate.csv", agg.str());
  if (cfg.svg) {
    std::ostringstream svg;
    write_svg(result.runs, env.j_star, svg);
    write_file(dir / "aggregate.svg", svg.str());
  }

  std::ostringstream sum;
  sum << "algo = " << config::algo_name(cfg.algo) << '\n';
  sum << "reps = " << cfg.reps << '\n';
  sum << "j_star = " << format_double(env.j_star) << '\n';
  sum << "j_star_note = value iteration over joint actions; an upper bound on the best softmax "
         "policy\n";
  sum << "value_iteration_sweeps = " << env.vi_sweeps << '\n';
  sum << "j_initial = " << format_double(oracle::objective(env.mdp, env.initial)) << '\n';
  if (cfg.algo == config::Algo::kNac) sum << "lambda_f = " << format_double(env.lambda_f) << '\n';
  for (int r = 0; r < cfg.reps; ++r) {
    const auto& run = result.runs[static_cast<std::size_t>(r)];
    const std::string p = "run." + run_name(r) + ".";
    sum << p << "seed = " << cfg.seed + static_cast<std::uint64_t>(r) << '\n';
    sum << p << "iterations = " << run.records.size() << '\n';
    sum << p << "output_iterate = " << run.output_iterate << '\n';
    if (!run.records.empty()) {
      sum << p << "final_j = " << format_double(run.records.back().j) << '\n';
      const auto& out = run.records[static_cast<std::size_t>(run.output_iterate - 1)];
      sum << p << "output_j = " << format_double(out.j) << '\n';
    }
    sum << p << "aborted = " << (run.aborted ? "true" : "false") << '\n';
    if (run.aborted) {
      sum << p << "abort_iteration = " << run.abort_iteration << '\n';
      sum << p << "abort_reason = " << run.abort_reason << '\n';
    }
  }
  write_file(dir / "summary.txt", sum.str());
  return result;
}

}  // namespace dmarl::experiment
