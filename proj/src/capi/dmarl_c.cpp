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

#include "dmarl/dmarl.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <new>
#include <optional>
#include <string>

#include "dmarl/config.hpp"
#include "dmarl/error.hpp"
#include "dmarl/experiment.hpp"
#include "dmarl/gossip.hpp"
#include "dmarl/mdp.hpp"
#include "dmarl/oracle.hpp"
#include "dmarl/policy.hpp"
#include "dmarl/text_io.hpp"

struct dmarl_mdp {
  dmarl::mdp::MultiAgentMdp value;
};
struct dmarl_mixing {
  dmarl::gossip::MixingMatrix value;
};
struct dmarl_policy {
  dmarl::policy::JointSoftmaxPolicy value;
};

namespace {

thread_local std::string last_error;

dmarl_status code_of(dmarl::ErrorKind kind) {
  switch (kind) {
    case dmarl::ErrorKind::kInvalidArgument: return DMARL_ERR_INVALID_ARGUMENT;
    case dmarl::ErrorKind::kConfig: return DMARL_ERR_CONFIG;
    case dmarl::ErrorKind::kDiverged: return DMARL_ERR_DIVERGED;
    case dmarl::ErrorKind::kNumeric: return DMARL_ERR_NUMERIC;
    case dmarl::ErrorKind::kIo: return DMARL_ERR_IO;
  }
  return DMARL_ERR_INTERNAL;
}

template <typename F>
dmarl_status guarded(F&& body) {
  try {
    return body();
  } catch (const dmarl::Error& e) {
    last_error = e.what();
    return code_of(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return DMARL_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return DMARL_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (p == nullptr) dmarl::fail(dmarl::ErrorKind::kInvalidArgument, std::string(what) + " is null");
}

dmarl::config::ExperimentConfig load(const dmarl_run_options* o) {
  need(o, "options");
  need(o->config_path, "config_path");
  dmarl::config::ExperimentConfig cfg = dmarl::config::parse_file(o->config_path);
  if (o->algo != nullptr) {
    const std::string a = o->algo;
    if (a == "ac") cfg.algo = dmarl::config::Algo::kAc;
    else if (a == "nac") cfg.algo = dmarl::config::Algo::kNac;
    else if (a == "dacrp") cfg.algo = dmarl::config::Algo::kDacRp;
    else dmarl::fail(dmarl::ErrorKind::kConfig, "unknown algorithm '" + a + "'");
  }
  if (o->override_seed) cfg.seed = o->seed;
  if (o->reps > 0) cfg.reps = o->reps;
  if (o->strict_rounds) cfg.strict_rounds = true;
  cfg.validate();
  return cfg;
}

std::string out_dir(const dmarl_run_options* o) { return o->out_dir ? o->out_dir : ""; }

}  // namespace

extern "C" {

const char* dmarl_version(void) { return "0.1.0"; }

const char* dmarl_last_error(void) { return last_error.c_str(); }

const char* dmarl_status_name(dmarl_status status) {
  switch (status) {
    case DMARL_OK: return "ok";
    case DMARL_ERR_INVALID_ARGUMENT: return "invalid argument";
    case DMARL_ERR_CONFIG: return "config error";
    case DMARL_ERR_DIVERGED: return "diverged";
    case DMARL_ERR_NUMERIC: return "numeric error";
    case DMARL_ERR_IO: return "I/O error";
    case DMARL_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

dmarl_status dmarl_mdp_random(uint64_t seed, int states, int agents, int actions, double gamma,
                              dmarl_mdp** out) {
  return guarded([&] {
    need(out, "out");
    dmarl::mdp::RandomMdpSpec spec;
    spec.seed = seed;
    spec.num_states = states;
    spec.num_agents = agents;
    spec.actions_per_agent = actions;
    spec.gamma = gamma;
    *out = new dmarl_mdp{dmarl::mdp::generate_random_mdp(spec)};
    return DMARL_OK;
  });
}

dmarl_status dmarl_mdp_cliff(double gamma, dmarl_mdp** out) {
  return guarded([&] {
    need(out, "out");
    *out = new dmarl_mdp{dmarl::mdp::build_cliff_navigation(gamma)};
    return DMARL_OK;
  });
}

dmarl_status dmarl_mdp_read(const char* path, dmarl_mdp** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    std::ifstream in(path);
    if (!in) dmarl::fail(dmarl::ErrorKind::kIo, std::string("cannot open ") + path);
    *out = new dmarl_mdp{dmarl::mdp::read_mdp_text(in)};
    return DMARL_OK;
  });
}

dmarl_status dmarl_mdp_write(const dmarl_mdp* mdp, const char* path) {
  return guarded([&] {
    need(mdp, "mdp");
    need(path, "path");
    std::ofstream out(path);
    if (!out) dmarl::fail(dmarl::ErrorKind::kIo, std::string("cannot write ") + path);
    dmarl::mdp::write_mdp_text(mdp->value, out);
    if (!out) dmarl::fail(dmarl::ErrorKind::kIo, std::string("write failed for ") + path);
    return DMARL_OK;
  });
}

dmarl_status dmarl_mdp_dims(const dmarl_mdp* mdp, int* states, int* agents, int* joint_actions) {
  return guarded([&] {
    need(mdp, "mdp");
    if (states) *states = mdp->value.num_states();
    if (agents) *agents = mdp->value.num_agents();
    if (joint_actions) *joint_actions = mdp->value.num_joint_actions();
    return DMARL_OK;
  });
}

dmarl_status dmarl_mdp_optimal_value(const dmarl_mdp* mdp, double tolerance, double* j_star) {
  return guarded([&] {
    need(mdp, "mdp");
    need(j_star, "j_star");
    *j_star = dmarl::oracle::optimal_joint_value(mdp->value, tolerance).j_star;
    return DMARL_OK;
  });
}

void dmarl_mdp_free(dmarl_mdp* mdp) { delete mdp; }

dmarl_status dmarl_mixing_ring(int agents, double self_weight, double neighbor_weight,
                               dmarl_mixing** out) {
  return guarded([&] {
    need(out, "out");
    *out = new dmarl_mixing{dmarl::gossip::MixingMatrix::ring(agents, self_weight, neighbor_weight)};
    return DMARL_OK;
  });
}

dmarl_status dmarl_mixing_complete(int agents, double self_weight, dmarl_mixing** out) {
  return guarded([&] {
    need(out, "out");
    *out = new dmarl_mixing{dmarl::gossip::MixingMatrix::complete(agents, self_weight)};
    return DMARL_OK;
  });
}

dmarl_status dmarl_mixing_from_weights(int agents, const double* weights, dmarl_mixing** out) {
  return guarded([&] {
    need(weights, "weights");
    need(out, "out");
    dmarl::require(agents >= 1, "agent count must be positive");
    Eigen::MatrixXd w = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                       Eigen::RowMajor>>(weights, agents, agents);
    *out = new dmarl_mixing{dmarl::gossip::MixingMatrix::from_weights(std::move(w))};
    return DMARL_OK;
  });
}

dmarl_status dmarl_mixing_sigma(const dmarl_mixing* w, double* sigma) {
  return guarded([&] {
    need(w, "mixing");
    need(sigma, "sigma");
    *sigma = w->value.sigma();
    return DMARL_OK;
  });
}

dmarl_status dmarl_gossip(const dmarl_mixing* w, double* values, int cols, int rounds) {
  return guarded([&] {
    need(w, "mixing");
    need(values, "values");
    dmarl::require(cols >= 1, "column count must be positive");
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<RowMajor> view(values, w->value.size(), cols);
    const Eigen::MatrixXd mixed = dmarl::gossip::gossip_rounds(w->value, Eigen::MatrixXd(view), rounds);
    view = mixed;
    return DMARL_OK;
  });
}

void dmarl_mixing_free(dmarl_mixing* w) { delete w; }

dmarl_status dmarl_policy_gaussian(const dmarl_mdp* mdp, uint64_t seed, dmarl_policy** out) {
  return guarded([&] {
    need(mdp, "mdp");
    need(out, "out");
    dmarl::Rng rng(seed);
    *out = new dmarl_policy{dmarl::policy::JointSoftmaxPolicy::gaussian(
        mdp->value.num_states(), mdp->value.action_counts(), rng)};
    return DMARL_OK;
  });
}

dmarl_status dmarl_policy_from_params(const dmarl_mdp* mdp, const double* params, size_t n,
                                      dmarl_policy** out) {
  return guarded([&] {
    need(mdp, "mdp");
    need(params, "params");
    need(out, "out");
    const Eigen::Map<const Eigen::VectorXd> flat(params, static_cast<Eigen::Index>(n));
    *out = new dmarl_policy{dmarl::policy::JointSoftmaxPolicy::unflatten(
        mdp->value.num_states(), mdp->value.action_counts(), flat)};
    return DMARL_OK;
  });
}

dmarl_status dmarl_policy_dim(const dmarl_policy* pi, size_t* n) {
  return guarded([&] {
    need(pi, "policy");
    need(n, "n");
    *n = static_cast<size_t>(pi->value.dim());
    return DMARL_OK;
  });
}

dmarl_status dmarl_policy_params(const dmarl_policy* pi, double* params, size_t n) {
  return guarded([&] {
    need(pi, "policy");
    need(params, "params");
    dmarl::require(n == static_cast<size_t>(pi->value.dim()), "buffer size must equal the policy dimension");
    const Eigen::VectorXd flat = pi->value.flatten();
    std::memcpy(params, flat.data(), n * sizeof(double));
    return DMARL_OK;
  });
}

dmarl_status dmarl_policy_objective(const dmarl_mdp* mdp, const dmarl_policy* pi, double* j) {
  return guarded([&] {
    need(mdp, "mdp");
    need(pi, "policy");
    need(j, "j");
    *j = dmarl::oracle::objective(mdp->value, pi->value);
    return DMARL_OK;
  });
}

dmarl_status dmarl_policy_gradient(const dmarl_mdp* mdp, const dmarl_policy* pi, double* grad,
                                   size_t n) {
  return guarded([&] {
    need(mdp, "mdp");
    need(pi, "policy");
    need(grad, "grad");
    dmarl::require(n == static_cast<size_t>(pi->value.dim()), "buffer size must equal the policy dimension");
    const Eigen::VectorXd g = dmarl::oracle::exact_policy_gradient(mdp->value, pi->value);
    std::memcpy(grad, g.data(), n * sizeof(double));
    return DMARL_OK;
  });
}

void dmarl_policy_free(dmarl_policy* pi) { delete pi; }

void dmarl_run_options_init(dmarl_run_options* options) {
  if (options) *options = dmarl_run_options{nullptr, nullptr, nullptr, 0, 0, 0, 0};
}

dmarl_status dmarl_validate_config(const dmarl_run_options* options) {
  return guarded([&] {
    (void)load(options);
    return DMARL_OK;
  });
}

dmarl_status dmarl_run_experiment(const dmarl_run_options* options) {
  return guarded([&] {
    const auto cfg = load(options);
    const auto result = dmarl::experiment::run_experiment(cfg, out_dir(options));
    if (result.any_aborted) {
      last_error = "at least one repetition diverged; see summary.txt";
      return DMARL_ERR_DIVERGED;
    }
    return DMARL_OK;
  });
}

dmarl_status dmarl_oracle_dump(const dmarl_run_options* options) {
  return guarded([&] {
    const auto cfg = load(options);
    const std::string dir = out_dir(options);
    if (dir.empty()) dmarl::fail(dmarl::ErrorKind::kInvalidArgument, "oracle dump needs an output directory");
    const auto env = dmarl::experiment::build_environment(cfg);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) dmarl::fail(dmarl::ErrorKind::kIo, "cannot create " + dir + ": " + ec.message());
    {
      std::ofstream out(std::filesystem::path(dir) / "mdp.txt");
      dmarl::mdp::write_mdp_text(env.mdp, out);
      if (!out) dmarl::fail(dmarl::ErrorKind::kIo, "cannot write mdp.txt");
    }
    const auto q = dmarl::oracle::compute_exact_quantities(env.mdp, env.initial, env.features,
                                                           cfg.oracle_ridge);
    std::ofstream out(std::filesystem::path(dir) / "oracle.txt");
    out << "j_star " << dmarl::text::format_double(env.j_star) << '\n';
    dmarl::oracle::write_exact_quantities(q, out);
    if (!out) dmarl::fail(dmarl::ErrorKind::kIo, "cannot write oracle.txt");
    return DMARL_OK;
  });
}

}  // extern "C"
