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

#include "treeval/treeval.h"

#include <cmath>
#include <cstring>
#include <exception>
#include <new>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "treeval/cart.hpp"
#include "treeval/dataset.hpp"
#include "treeval/error.hpp"
#include "treeval/inference.hpp"
#include "treeval/oracle.hpp"
#include "treeval/sim.hpp"
#include "treeval/truncation.hpp"

struct tv_dataset {
  treeval::Dataset data;
};

struct tv_tree {
  treeval::Dataset data;
  treeval::Tree tree;
};

namespace {

using treeval::Error;
using treeval::ErrorCode;
using json = nlohmann::json;

thread_local std::string g_last_error;

tv_status fail(tv_status code, const std::string& message) {
  g_last_error = message;
  return code;
}

// Runs `body`, translating exceptions into status codes.
template <typename F>
tv_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return TV_OK;
  } catch (const Error& e) {
    return fail(static_cast<tv_status>(static_cast<int>(e.code())), e.what());
  } catch (const json::exception& e) {
    return fail(TV_ERR_PARSE, std::string("malformed JSON: ") + e.what());
  } catch (const std::bad_alloc&) {
    return fail(TV_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(TV_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(TV_ERR_INTERNAL, "unknown failure");
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::kInvalidArgument, what);
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

json parse_config(const char* text) {
  if (text == nullptr || *text == '\0') return json::object();
  json j = json::parse(text);
  require(j.is_object(), "configuration must be a JSON object");
  return j;
}

// Rejects keys outside `allowed` so typos do not pass silently.
void check_keys(const json& j, std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) known = known || it.key() == k;
    if (!known) throw Error(ErrorCode::kInvalidArgument, "unknown configuration key: " + it.key());
  }
}

treeval::StoppingRule to_rule(const tv_fit_options& o) {
  treeval::StoppingRule r;
  r.max_level = o.max_level;
  r.min_node_size = o.min_node_size;
  r.min_gain = o.min_gain;
  treeval::validate(r);
  return r;
}

struct ResolvedInference {
  double sigma = 0.0;
  treeval::InferenceOptions opts;
};

ResolvedInference resolve(const tv_tree* t, const tv_infer_options* o) {
  require(t != nullptr && o != nullptr, "null tree or options");
  require(o->alpha > 0.0 && o->alpha < 1.0, "alpha must lie in (0, 1)");
  require(std::isfinite(o->null_value), "null value must be finite");
  ResolvedInference r;
  if (o->estimate_sigma) {
    r.sigma = treeval::estimate_sigma(t->data.y());
  } else {
    require(std::isfinite(o->sigma) && o->sigma > 0.0,
            "sigma must be positive (or request estimate_sigma)");
    r.sigma = o->sigma;
  }
  r.opts.alpha = o->alpha;
  r.opts.null_value = o->null_value;
  r.opts.mode = treeval::parse_permutation_mode(o->mode ? o->mode : "identity");
  return r;
}

void mark_sigma(treeval::InferenceResult& res, const tv_infer_options* o) {
  if (o->estimate_sigma) res.sigma_source = treeval::SigmaSource::kEstimated;
}

void fill(const treeval::InferenceResult& r, tv_inference* out) {
  out->statistic = r.statistic;
  out->p_value = r.p_value;
  out->ci_lo = r.ci_lo;
  out->ci_hi = r.ci_hi;
  out->sd = r.sd;
  out->sigma = r.sigma;
  out->level = r.level;
}

bool same_structure(const treeval::Tree& a, const treeval::Tree& b) {
  if (a.size() != b.size() || a.root != b.root) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& ra = a.regions[i];
    const auto& rb = b.regions[i];
    if (ra.members != rb.members || ra.left != rb.left || ra.right != rb.right ||
        ra.split_feature != rb.split_feature || ra.split_rank != rb.split_rank) {
      return false;
    }
  }
  return true;
}

template <typename T>
void take(const json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

treeval::sim::SimConfig sim_config(const json& j) {
  check_keys(j, {"n", "p", "sigma", "lambda", "max_level", "min_node_size", "min_gain",
                 "replicates", "seed", "alpha", "estimate_sigma", "mode", "a_values",
                 "b_values", "threads", "selective", "naive", "sample_split"});
  treeval::sim::SimConfig c;
  take(j, "n", c.n);
  take(j, "p", c.p);
  take(j, "sigma", c.sigma);
  take(j, "lambda", c.lambda);
  take(j, "max_level", c.stop.max_level);
  take(j, "min_node_size", c.stop.min_node_size);
  take(j, "min_gain", c.stop.min_gain);
  take(j, "replicates", c.replicates);
  take(j, "seed", c.seed);
  take(j, "alpha", c.alpha);
  take(j, "estimate_sigma", c.estimate_sigma);
  if (j.contains("mode")) c.mode = treeval::parse_permutation_mode(j.at("mode").get<std::string>());
  take(j, "a_values", c.a_values);
  take(j, "b_values", c.b_values);
  take(j, "threads", c.threads);
  take(j, "selective", c.selective);
  take(j, "naive", c.naive);
  take(j, "sample_split", c.sample_split);
  c.validate();
  return c;
}

treeval::oracle::StudyConfig oracle_config(const json& j) {
  check_keys(j, {"instances", "seed", "n_min", "n_max", "p_max", "max_level", "grid_points",
                 "lambdas"});
  treeval::oracle::StudyConfig c;
  take(j, "instances", c.instances);
  take(j, "seed", c.seed);
  take(j, "n_min", c.n_min);
  take(j, "n_max", c.n_max);
  take(j, "p_max", c.p_max);
  take(j, "max_level", c.max_level);
  take(j, "grid_points", c.grid_points);
  take(j, "lambdas", c.lambdas);
  require(c.instances >= 1, "instances must be at least 1");
  require(c.n_min >= 2 && c.n_max >= c.n_min, "need 2 <= n_min <= n_max");
  require(c.p_max >= 1, "p_max must be at least 1");
  require(c.max_level >= 0, "max_level must be non-negative");
  require(c.grid_points >= 2, "grid_points must be at least 2");
  require(!c.lambdas.empty(), "lambdas must not be empty");
  for (double l : c.lambdas) require(std::isfinite(l) && l >= 0.0, "lambdas must be >= 0");
  return c;
}

}  // namespace

extern "C" {

const char* tv_version(void) { return "0.3.0"; }

const char* tv_last_error(void) { return g_last_error.c_str(); }

const char* tv_status_name(tv_status status) {
  switch (status) {
    case TV_OK: return "ok";
    case TV_ERR_IO: return "io";
    case TV_ERR_PARSE: return "parse";
    case TV_ERR_MISSING_COLUMN: return "missing_column";
    case TV_ERR_TOO_FEW_ROWS: return "too_few_rows";
    case TV_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case TV_ERR_OUT_OF_RANGE: return "out_of_range";
    case TV_ERR_DEGENERATE: return "degenerate";
    case TV_ERR_INCONSISTENT: return "inconsistent";
    case TV_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

void tv_string_free(char* s) { delete[] s; }

tv_status tv_dataset_load_csv(const char* path, const char* response_column, tv_dataset** out) {
  return guarded([&] {
    require(path && response_column && out, "null argument");
    *out = nullptr;
    *out = new tv_dataset{treeval::load_csv(path, response_column)};
  });
}

tv_status tv_dataset_save_csv(const tv_dataset* d, const char* path, int sidecar) {
  return guarded([&] {
    require(d && path, "null argument");
    treeval::save_csv(d->data, path, sidecar != 0);
  });
}

tv_status tv_dataset_shape(const tv_dataset* d, size_t* n, size_t* p) {
  return guarded([&] {
    require(d && n && p, "null argument");
    *n = d->data.n();
    *p = d->data.p();
  });
}

tv_status tv_dataset_checksum(const tv_dataset* d, char** out) {
  return guarded([&] {
    require(d && out, "null argument");
    *out = dup_string(d->data.checksum());
  });
}

void tv_dataset_free(tv_dataset* d) { delete d; }

tv_fit_options tv_fit_options_default(void) {
  const treeval::StoppingRule r;
  return tv_fit_options{0.0, r.max_level, r.min_node_size, r.min_gain};
}

tv_status tv_tree_fit(const tv_dataset* d, const tv_fit_options* opts, tv_tree** out) {
  return guarded([&] {
    require(d && opts && out, "null argument");
    *out = nullptr;
    require(std::isfinite(opts->lambda) && opts->lambda >= 0.0, "lambda must be >= 0");
    const treeval::StoppingRule rule = to_rule(*opts);
    treeval::Tree t = treeval::fit(d->data, d->data.y(), rule, opts->lambda);
    *out = new tv_tree{d->data, std::move(t)};
  });
}

tv_status tv_tree_from_json(const tv_dataset* d, const char* text, tv_tree** out) {
  return guarded([&] {
    require(d && text && out, "null argument");
    *out = nullptr;
    treeval::Tree t = treeval::tree_from_json(json::parse(text), d->data, d->data.y());
    treeval::validate(t.stop);
    const treeval::Tree refit = treeval::fit(d->data, d->data.y(), t.stop, t.lambda);
    if (!same_structure(t, refit)) {
      throw Error(ErrorCode::kInconsistent,
                  "tree is not the fit of this dataset under its recorded lambda and "
                  "stopping rule");
    }
    *out = new tv_tree{d->data, std::move(t)};
  });
}

tv_status tv_tree_to_json(const tv_tree* t, char** out) {
  return guarded([&] {
    require(t && out, "null argument");
    *out = dup_string(treeval::tree_to_json(t->tree, t->data).dump(2));
  });
}

tv_status tv_tree_size(const tv_tree* t, size_t* regions) {
  return guarded([&] {
    require(t && regions, "null argument");
    *regions = t->tree.size();
  });
}

tv_status tv_tree_predict(const tv_tree* t, const double* x, size_t p, double* out) {
  return guarded([&] {
    require(t && x && out, "null argument");
    if (p != t->data.p()) {
      throw Error(ErrorCode::kInvalidArgument, "expected " + std::to_string(t->data.p()) +
                                                   " covariates, got " + std::to_string(p));
    }
    *out = treeval::predict(t->tree, std::span<const double>(x, p));
  });
}

void tv_tree_free(tv_tree* t) { delete t; }

tv_infer_options tv_infer_options_default(void) {
  return tv_infer_options{std::nan(""), 0, 0.05, 0.0, nullptr};
}

tv_status tv_infer_split(const tv_tree* t, int region_id, const tv_infer_options* opts,
                         tv_inference* out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    const ResolvedInference r = resolve(t, opts);
    auto res = treeval::infer_split(t->tree, region_id, t->data, t->data.y(), r.sigma, r.opts);
    fill(res, out);
  });
}

tv_status tv_infer_region(const tv_tree* t, int region_id, const tv_infer_options* opts,
                          tv_inference* out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    const ResolvedInference r = resolve(t, opts);
    auto res = treeval::infer_region(t->tree, region_id, t->data, t->data.y(), r.sigma, r.opts);
    fill(res, out);
  });
}

tv_status tv_infer_json(const tv_tree* t, const int* split_ids, size_t n_splits,
                        const int* region_ids, size_t n_regions, const tv_infer_options* opts,
                        char** out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    require(n_splits == 0 || split_ids, "null split ids");
    require(n_regions == 0 || region_ids, "null region ids");
    const ResolvedInference r = resolve(t, opts);
    std::vector<treeval::InferenceResult> results;
    if (n_splits == 0 && n_regions == 0) {
      results = treeval::infer_all(t->tree, t->data, t->data.y(), r.sigma, r.opts);
    } else {
      for (size_t i = 0; i < n_splits; ++i) {
        results.push_back(
            treeval::infer_split(t->tree, split_ids[i], t->data, t->data.y(), r.sigma, r.opts));
      }
      for (size_t i = 0; i < n_regions; ++i) {
        results.push_back(treeval::infer_region(t->tree, region_ids[i], t->data, t->data.y(),
                                                r.sigma, r.opts));
      }
    }
    json arr = json::array();
    for (auto& res : results) {
      mark_sigma(res, opts);
      arr.push_back(treeval::to_json(res));
    }
    *out = dup_string(arr.dump(2));
  });
}

tv_status tv_simulate(const char* study, const char* config_json, const char* csv_path,
                      char** summary_json) {
  return guarded([&] {
    require(study != nullptr, "null study name");
    const std::string name = study;
    require(name == "null" || name == "power" || name == "coverage",
            "study must be one of null, power, coverage");
    const treeval::sim::SimConfig cfg = sim_config(parse_config(config_json));
    const treeval::sim::StudyResult res = treeval::sim::run_study(name, cfg);
    if (csv_path != nullptr) treeval::sim::write_csv(res, csv_path);
    if (summary_json != nullptr) {
      json s = {{"study", res.study},
                {"config", cfg.to_json()},
                {"rows", res.rows.size()},
                {"errors", res.errors},
                {"skipped", res.skipped},
                {"summary", res.summary}};
      *summary_json = dup_string(s.dump(2));
    }
  });
}

tv_status tv_oracle_run(const char* config_json, char** report_json) {
  return guarded([&] {
    require(report_json != nullptr, "null argument");
    const auto cfg = oracle_config(parse_config(config_json));
    const auto report = treeval::oracle::run_study(cfg);
    *report_json = dup_string(report.to_json().dump(2));
  });
}

}  // extern "C"
