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

/* Exercises the public C interface from C. */

#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "treeval/treeval.h"

static int failures = 0;

#define EXPECT(cond)                                                   \
  do {                                                                 \
    if (!(cond)) {                                                     \
      fprintf(stderr, "%s:%d: expected %s (last error: %s)\n", __FILE__, \
              __LINE__, #cond, tv_last_error());                       \
      ++failures;                                                      \
    }                                                                  \
  } while (0)

static const char* data_path(const char* name) {
  static char buf[4096];
  snprintf(buf, sizeof buf, "%s/%s", TREEVAL_TEST_DATA_DIR, name);
  return buf;
}

static void test_dataset(void) {
  tv_dataset* d = NULL;
  size_t n = 0, p = 0;
  char* sum = NULL;
  EXPECT(tv_dataset_load_csv(data_path("four.csv"), "y", &d) == TV_OK);
  EXPECT(tv_dataset_shape(d, &n, &p) == TV_OK);
  EXPECT(n == 4 && p == 2);
  EXPECT(tv_dataset_checksum(d, &sum) == TV_OK);
  EXPECT(sum != NULL && strlen(sum) == 16);
  tv_string_free(sum);
  tv_dataset_free(d);

  d = NULL;
  EXPECT(tv_dataset_load_csv(data_path("four.csv"), "nope", &d) == TV_ERR_MISSING_COLUMN);
  EXPECT(d == NULL);
  EXPECT(strstr(tv_last_error(), "nope") != NULL);
  EXPECT(tv_dataset_load_csv(data_path("blank_cell.csv"), "y", &d) == TV_ERR_PARSE);
  EXPECT(tv_dataset_load_csv(data_path("absent.csv"), "y", &d) == TV_ERR_IO);
  EXPECT(tv_dataset_load_csv(NULL, "y", &d) == TV_ERR_INVALID_ARGUMENT);
  EXPECT(strcmp(tv_status_name(TV_ERR_DEGENERATE), "degenerate") == 0);
}

static void test_tree_and_inference(void) {
  tv_dataset* d = NULL;
  tv_dataset* alt = NULL;
  tv_tree* t = NULL;
  tv_tree* back = NULL;
  char* json = NULL;
  size_t k = 0;
  double pred = 0.0;
  const double x[2] = {1.5, 0.0};
  tv_fit_options fo = tv_fit_options_default();
  tv_infer_options io = tv_infer_options_default();
  tv_inference r;
  int split_ids[1];
  char* results = NULL;

  EXPECT(tv_dataset_load_csv(data_path("four.csv"), "y", &d) == TV_OK);
  fo.max_level = 1;
  EXPECT(tv_tree_fit(d, &fo, &t) == TV_OK);
  EXPECT(tv_tree_size(t, &k) == TV_OK && k == 3);
  EXPECT(tv_tree_predict(t, x, 2, &pred) == TV_OK && pred == 0.0);
  EXPECT(tv_tree_predict(t, x, 1, &pred) == TV_ERR_INVALID_ARGUMENT);

  EXPECT(tv_tree_to_json(t, &json) == TV_OK);
  EXPECT(strstr(json, "treeval.tree/1") != NULL);
  EXPECT(tv_tree_from_json(d, json, &back) == TV_OK);
  EXPECT(tv_tree_size(back, &k) == TV_OK && k == 3);
  tv_tree_free(back);

  /* The same tree is not the fit of a different response. */
  EXPECT(tv_dataset_load_csv(data_path("four_alt.csv"), "y", &alt) == TV_OK);
  back = NULL;
  EXPECT(tv_tree_from_json(alt, json, &back) == TV_ERR_INCONSISTENT);
  EXPECT(back == NULL);
  EXPECT(tv_tree_from_json(d, "{not json", &back) == TV_ERR_PARSE);
  tv_string_free(json);

  /* sigma is mandatory unless it is estimated */
  EXPECT(tv_infer_split(t, 2, &io, &r) == TV_ERR_INVALID_ARGUMENT);
  EXPECT(strstr(tv_last_error(), "sigma") != NULL);
  io.sigma = 1.0;
  EXPECT(tv_infer_split(t, 2, &io, &r) == TV_OK);
  EXPECT(fabs(r.statistic + 10.0) < 1e-12);
  EXPECT(r.p_value >= 0.0 && r.p_value < 1e-10);
  EXPECT(r.ci_lo < -10.0 && r.ci_hi > -10.0);
  EXPECT(r.level == 1);
  EXPECT(tv_infer_split(t, 0, &io, &r) == TV_ERR_INVALID_ARGUMENT);
  EXPECT(tv_infer_region(t, 2, &io, &r) == TV_OK);
  EXPECT(fabs(r.statistic - 5.0) < 1e-12);
  io.mode = "budget:0";
  EXPECT(tv_infer_region(t, 0, &io, &r) == TV_ERR_INVALID_ARGUMENT);
  io.mode = "full";
  io.estimate_sigma = 1;
  EXPECT(tv_infer_region(t, 0, &io, &r) == TV_OK);
  EXPECT(fabs(r.sigma - sqrt(100.0 / 3.0)) < 1e-9);

  EXPECT(tv_infer_json(t, NULL, 0, NULL, 0, &io, &results) == TV_OK);
  EXPECT(strstr(results, "\"estimated\"") != NULL);
  tv_string_free(results);
  split_ids[0] = 2;
  EXPECT(tv_infer_json(t, split_ids, 1, NULL, 0, &io, &results) == TV_OK);
  EXPECT(strstr(results, "\"split\"") != NULL && strstr(results, "\"region\"") == NULL);
  tv_string_free(results);

  tv_tree_free(t);
  tv_dataset_free(alt);
  tv_dataset_free(d);
}

static void test_studies(void) {
  char* summary = NULL;
  char* report = NULL;
  EXPECT(tv_simulate("null", "{\"replicates\": 3, \"seed\": 5, \"threads\": 2}", NULL,
                     &summary) == TV_OK);
  EXPECT(summary != NULL && strstr(summary, "\"null\"") != NULL);
  tv_string_free(summary);
  EXPECT(tv_simulate("bogus", NULL, NULL, &summary) == TV_ERR_INVALID_ARGUMENT);
  EXPECT(tv_simulate("null", "{\"replicate\": 3}", NULL, &summary) == TV_ERR_INVALID_ARGUMENT);
  EXPECT(tv_simulate("null", "[1]", NULL, &summary) == TV_ERR_INVALID_ARGUMENT);
  EXPECT(tv_oracle_run("{\"instances\": 2, \"grid_points\": 101}", &report) == TV_OK);
  EXPECT(strstr(report, "\"mismatches\": 0") != NULL);
  tv_string_free(report);
  EXPECT(tv_oracle_run("{\"n_min\": 1}", &report) == TV_ERR_INVALID_ARGUMENT);
}

int main(void) {
  EXPECT(strcmp(tv_version(), "0.3.0") == 0);
  test_dataset();
  test_tree_and_inference();
  test_studies();
  if (failures) {
    fprintf(stderr, "%d C API expectation(s) failed\n", failures);
    return 1;
  }
  printf("C API: all expectations met\n");
  return 0;
}
