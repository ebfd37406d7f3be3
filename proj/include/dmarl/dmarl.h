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


/* C interface to the dmarl simulator. Every call returns a dmarl_status;
 * on failure dmarl_last_error() describes the problem (thread local, valid
 * until the next failing call on the same thread). Handles are opaque and
 * owned by the caller. */

#ifndef DMARL_DMARL_H_
#define DMARL_DMARL_H_

#include <stddef.h>
#include <stdint.h>

#if defined(DMARL_BUILDING_LIBRARY)
#define DMARL_API __attribute__((visibility("default")))
#else
#define DMARL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dmarl_status {
  DMARL_OK = 0,
  DMARL_ERR_INVALID_ARGUMENT = 1,
  DMARL_ERR_CONFIG = 2,
  DMARL_ERR_DIVERGED = 3,
  DMARL_ERR_NUMERIC = 4,
  DMARL_ERR_IO = 5,
  DMARL_ERR_INTERNAL = 6
} dmarl_status;

typedef struct dmarl_mdp dmarl_mdp;
typedef struct dmarl_mixing dmarl_mixing;
typedef struct dmarl_policy dmarl_policy;

DMARL_API const char* dmarl_version(void);
DMARL_API const char* dmarl_last_error(void);
DMARL_API const char* dmarl_status_name(dmarl_status status);

/* Environments. */
DMARL_API dmarl_status dmarl_mdp_random(uint64_t seed, int states, int agents, int actions,
                                        double gamma, dmarl_mdp** out);
DMARL_API dmarl_status dmarl_mdp_cliff(double gamma, dmarl_mdp** out);
DMARL_API dmarl_status dmarl_mdp_read(const char* path, dmarl_mdp** out);
DMARL_API dmarl_status dmarl_mdp_write(const dmarl_mdp* mdp, const char* path);
DMARL_API dmarl_status dmarl_mdp_dims(const dmarl_mdp* mdp, int* states, int* agents,
                                      int* joint_actions);
/* Value iteration over joint actions. */
DMARL_API dmarl_status dmarl_mdp_optimal_value(const dmarl_mdp* mdp, double tolerance,
                                               double* j_star);
DMARL_API void dmarl_mdp_free(dmarl_mdp* mdp);

/* Mixing matrices and gossip. */
DMARL_API dmarl_status dmarl_mixing_ring(int agents, double self_weight, double neighbor_weight,
                                         dmarl_mixing** out);
DMARL_API dmarl_status dmarl_mixing_complete(int agents, double self_weight, dmarl_mixing** out);
/* weights: agents x agents, row major. */
DMARL_API dmarl_status dmarl_mixing_from_weights(int agents, const double* weights,
                                                 dmarl_mixing** out);
DMARL_API dmarl_status dmarl_mixing_sigma(const dmarl_mixing* w, double* sigma);
/* values: agents x cols, row major, updated in place. */
DMARL_API dmarl_status dmarl_gossip(const dmarl_mixing* w, double* values, int cols, int rounds);
DMARL_API void dmarl_mixing_free(dmarl_mixing* w);

/* Joint softmax policies; parameters are flattened agent by agent, each agent's
 * |S| x |A_m| table row major. */
DMARL_API dmarl_status dmarl_policy_gaussian(const dmarl_mdp* mdp, uint64_t seed,
                                             dmarl_policy** out);
DMARL_API dmarl_status dmarl_policy_from_params(const dmarl_mdp* mdp, const double* params,
                                                size_t n, dmarl_policy** out);
DMARL_API dmarl_status dmarl_policy_dim(const dmarl_policy* pi, size_t* n);
DMARL_API dmarl_status dmarl_policy_params(const dmarl_policy* pi, double* params, size_t n);
DMARL_API dmarl_status dmarl_policy_objective(const dmarl_mdp* mdp, const dmarl_policy* pi,
                                              double* j);
DMARL_API dmarl_status dmarl_policy_gradient(const dmarl_mdp* mdp, const dmarl_policy* pi,
                                             double* grad, size_t n);
DMARL_API void dmarl_policy_free(dmarl_policy* pi);

/* Experiments driven by a config file. */
typedef struct dmarl_run_options {
  const char* config_path; /* required */
  const char* out_dir;     /* NULL or "" writes nothing */
  const char* algo;        /* "ac", "nac", "dacrp" or NULL to keep the config's */
  int override_seed;       /* nonzero: use seed below */
  uint64_t seed;
  int reps;                /* > 0 overrides run.reps */
  int strict_rounds;       /* nonzero forces strict round accounting */
} dmarl_run_options;

DMARL_API void dmarl_run_options_init(dmarl_run_options* options);
DMARL_API dmarl_status dmarl_validate_config(const dmarl_run_options* options);
/* Returns DMARL_ERR_DIVERGED (after writing all outputs) if any repetition aborted. */
DMARL_API dmarl_status dmarl_run_experiment(const dmarl_run_options* options);
/* Writes mdp.txt and oracle.txt (exact quantities at omega_0) to out_dir. */
DMARL_API dmarl_status dmarl_oracle_dump(const dmarl_run_options* options);

#ifdef __cplusplus
}
#endif

#endif /* DMARL_DMARL_H_ */
