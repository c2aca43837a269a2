/*
 * Copyright 2026 The treeval Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to treeval: CART regression trees with selective p-values and
 * confidence intervals for their splits and regions.
 *
 * Every function returning tv_status leaves a message retrievable with
 * tv_last_error() on failure. Strings handed out through char** parameters
 * are owned by the caller and released with tv_string_free(). */

#ifndef TREEVAL_TREEVAL_H_
#define TREEVAL_TREEVAL_H_

#include <stddef.h>

#if defined(_WIN32)
#define TV_API __declspec(dllexport)
#else
#define TV_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tv_status {
  TV_OK = 0,
  TV_ERR_IO = 1,
  TV_ERR_PARSE = 2,
  TV_ERR_MISSING_COLUMN = 3,
  TV_ERR_TOO_FEW_ROWS = 4,
  TV_ERR_INVALID_ARGUMENT = 5,
  TV_ERR_OUT_OF_RANGE = 6,
  TV_ERR_DEGENERATE = 7,
  TV_ERR_INCONSISTENT = 8,
  TV_ERR_INTERNAL = 9
} tv_status;

typedef struct tv_dataset tv_dataset;
typedef struct tv_tree tv_tree;

TV_API const char* tv_version(void);
/* Message of the most recent failure on the calling thread. */
TV_API const char* tv_last_error(void);
TV_API const char* tv_status_name(tv_status status);
TV_API void tv_string_free(char* s);

/* ---- datasets ---- */

TV_API tv_status tv_dataset_load_csv(const char* path, const char* response_column,
                                     tv_dataset** out);
TV_API tv_status tv_dataset_save_csv(const tv_dataset* d, const char* path, int sidecar);
TV_API tv_status tv_dataset_shape(const tv_dataset* d, size_t* n, size_t* p);
TV_API tv_status tv_dataset_checksum(const tv_dataset* d, char** out);
TV_API void tv_dataset_free(tv_dataset* d);

/* ---- trees ---- */

typedef struct tv_fit_options {
  double lambda;
  int max_level;
  int min_node_size;
  double min_gain;
} tv_fit_options;

TV_API tv_fit_options tv_fit_options_default(void);

/* The tree keeps its own copy of the dataset. */
TV_API tv_status tv_tree_fit(const tv_dataset* d, const tv_fit_options* opts, tv_tree** out);
/* Rebuilds a serialized tree against `d` and refits with the recorded
 * settings; fails with TV_ERR_INCONSISTENT unless the refit reproduces it. */
TV_API tv_status tv_tree_from_json(const tv_dataset* d, const char* json, tv_tree** out);
TV_API tv_status tv_tree_to_json(const tv_tree* t, char** out);
TV_API tv_status tv_tree_size(const tv_tree* t, size_t* regions);
TV_API tv_status tv_tree_predict(const tv_tree* t, const double* x, size_t p, double* out);
TV_API void tv_tree_free(tv_tree* t);

/* ---- inference ---- */

typedef struct tv_infer_options {
  double sigma;       /* noise sd; required unless estimate_sigma is set */
  int estimate_sigma; /* use the sample sd of the response */
  double alpha;
  double null_value;  /* region tests */
  const char* mode;   /* "identity", "full" or "budget:K"; NULL for identity */
} tv_infer_options;

TV_API tv_infer_options tv_infer_options_default(void);

typedef struct tv_inference {
  double statistic;
  double p_value;
  double ci_lo;
  double ci_hi;
  double sd;
  double sigma;
  int level;
} tv_inference;

/* Split owned by internal region `region_id`: side-1 child minus side-0 child. */
TV_API tv_status tv_infer_split(const tv_tree* t, int region_id, const tv_infer_options* opts,
                                tv_inference* out);
TV_API tv_status tv_infer_region(const tv_tree* t, int region_id,
                                 const tv_infer_options* opts, tv_inference* out);
/* JSON array of results. With both counts zero every split and every region
 * is reported. */
TV_API tv_status tv_infer_json(const tv_tree* t, const int* split_ids, size_t n_splits,
                               const int* region_ids, size_t n_regions,
                               const tv_infer_options* opts, char** out);

/* ---- studies ---- */

/* study: "null", "power" or "coverage". config_json may be NULL or an object
 * overriding n, p, sigma, lambda, max_level, min_node_size, min_gain,
 * replicates, seed, alpha, estimate_sigma, mode, a_values, b_values,
 * threads. Rows go to csv_path when it is not NULL. */
TV_API tv_status tv_simulate(const char* study, const char* config_json, const char* csv_path,
                             char** summary_json);
/* config_json overrides instances, seed, n_min, n_max, p_max, max_level,
 * grid_points, lambdas. */
TV_API tv_status tv_oracle_run(const char* config_json, char** report_json);

#ifdef __cplusplus
}
#endif

#endif /* TREEVAL_TREEVAL_H_ */
