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

// treeval command line: fit, test, simulate, oracle.

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "treeval/treeval.h"

namespace {

using json = nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitValidation = 2;

struct Failure {
  int exit_code;
  std::string message;
};

int exit_code_for(tv_status s) {
  switch (s) {
    case TV_ERR_INVALID_ARGUMENT:
    case TV_ERR_OUT_OF_RANGE:
    case TV_ERR_MISSING_COLUMN:
      return kExitValidation;
    default:
      return kExitRuntime;
  }
}

void check(tv_status s, const std::string& context) {
  if (s != TV_OK) {
    throw Failure{exit_code_for(s),
                  context + ": " + tv_status_name(s) + ": " + tv_last_error()};
  }
}

void invalid(const std::string& message) { throw Failure{kExitValidation, message}; }

std::string take_string(char* s) {
  std::string out = s ? s : "";
  tv_string_free(s);
  return out;
}

// Owning wrappers for the opaque handles.
struct DatasetHandle {
  tv_dataset* ptr = nullptr;
  ~DatasetHandle() { tv_dataset_free(ptr); }
};
struct TreeHandle {
  tv_tree* ptr = nullptr;
  ~TreeHandle() { tv_tree_free(ptr); }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{kExitRuntime, "cannot open " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text << '\n';
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Failure{kExitRuntime, "cannot write " + path};
  out << text << '\n';
  if (!out) throw Failure{kExitRuntime, "failed writing " + path};
}

class Manifest {
 public:
  explicit Manifest(std::string command)
      : command_(std::move(command)), start_(std::chrono::steady_clock::now()) {}

  json finish(json config, std::optional<std::string> checksum,
              std::optional<std::uint64_t> seed) const {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    return {{"command", command_},
            {"config", std::move(config)},
            {"dataset_checksum", checksum ? json(*checksum) : json()},
            {"seed", seed ? json(*seed) : json()},
            {"version", tv_version()},
            {"seconds", secs}};
  }

 private:
  std::string command_;
  std::chrono::steady_clock::time_point start_;
};

std::string checksum_of(const DatasetHandle& d) {
  char* s = nullptr;
  check(tv_dataset_checksum(d.ptr, &s), "checksum");
  return take_string(s);
}

struct FitArgs {
  std::string data;
  std::string response = "y";
  double lambda = 0.0;
  int max_level = 30;
  int min_node = 1;
  double min_gain = 0.0;
  std::string out;
};

int run_fit(const FitArgs& a) {
  Manifest manifest("fit");
  DatasetHandle d;
  check(tv_dataset_load_csv(a.data.c_str(), a.response.c_str(), &d.ptr), "loading " + a.data);
  tv_fit_options fo = tv_fit_options_default();
  fo.lambda = a.lambda;
  fo.max_level = a.max_level;
  fo.min_node_size = a.min_node;
  fo.min_gain = a.min_gain;
  TreeHandle t;
  check(tv_tree_fit(d.ptr, &fo, &t.ptr), "fit");
  char* text = nullptr;
  check(tv_tree_to_json(t.ptr, &text), "serializing tree");
  json tree = json::parse(take_string(text));
  tree["manifest"] = manifest.finish({{"data", a.data},
                                      {"response", a.response},
                                      {"lambda", a.lambda},
                                      {"max_level", a.max_level},
                                      {"min_node", a.min_node},
                                      {"min_gain", a.min_gain}},
                                     checksum_of(d), std::nullopt);
  emit(tree.dump(2), a.out);
  return kExitOk;
}

struct TestArgs {
  std::string tree;
  std::string data;
  std::string response;
  std::vector<int> splits;
  std::vector<int> regions;
  std::optional<double> sigma;
  bool estimate_sigma = false;
  double alpha = 0.05;
  double null_value = 0.0;
  std::string mode = "identity";
  std::string out;
};

int run_test(const TestArgs& a) {
  Manifest manifest("test");
  if (!a.sigma && !a.estimate_sigma) {
    invalid("--sigma is required unless --estimate-sigma is given");
  }
  if (a.sigma && a.estimate_sigma) invalid("--sigma and --estimate-sigma are exclusive");
  const std::string tree_text = read_file(a.tree);
  std::string response = a.response;
  if (response.empty()) {
    try {
      response = json::parse(tree_text).value("response", "y");
    } catch (const json::exception& e) {
      throw Failure{kExitRuntime, "malformed tree JSON in " + a.tree + ": " + e.what()};
    }
  }
  DatasetHandle d;
  check(tv_dataset_load_csv(a.data.c_str(), response.c_str(), &d.ptr), "loading " + a.data);
  TreeHandle t;
  check(tv_tree_from_json(d.ptr, tree_text.c_str(), &t.ptr), "reading tree " + a.tree);

  tv_infer_options io = tv_infer_options_default();
  if (a.sigma) io.sigma = *a.sigma;
  io.estimate_sigma = a.estimate_sigma ? 1 : 0;
  io.alpha = a.alpha;
  io.null_value = a.null_value;
  io.mode = a.mode.c_str();
  char* text = nullptr;
  check(tv_infer_json(t.ptr, a.splits.data(), a.splits.size(), a.regions.data(),
                      a.regions.size(), &io, &text),
        "inference");
  json doc = {{"schema", "treeval.inference/1"}, {"results", json::parse(take_string(text))}};
  doc["manifest"] = manifest.finish({{"tree", a.tree},
                                     {"data", a.data},
                                     {"response", response},
                                     {"splits", a.splits},
                                     {"regions", a.regions},
                                     {"sigma", a.sigma ? json(*a.sigma) : json()},
                                     {"estimate_sigma", a.estimate_sigma},
                                     {"alpha", a.alpha},
                                     {"null_value", a.null_value},
                                     {"mode", a.mode}},
                                    checksum_of(d), std::nullopt);
  emit(doc.dump(2), a.out);
  return kExitOk;
}

struct SimulateArgs {
  std::string study;
  json config = json::object();
  std::uint64_t seed = 1;
  std::string out;
  std::string summary;
};

int run_simulate(SimulateArgs a) {
  Manifest manifest("simulate");
  a.config["seed"] = a.seed;
  char* text = nullptr;
  const std::string cfg = a.config.dump();
  check(tv_simulate(a.study.c_str(), cfg.c_str(), a.out.empty() ? nullptr : a.out.c_str(),
                    &text),
        "simulate " + a.study);
  json doc = json::parse(take_string(text));
  doc["schema"] = "treeval.simulation/1";
  json echo = a.config;
  echo["study"] = a.study;
  echo["out"] = a.out;
  doc["manifest"] = manifest.finish(std::move(echo), std::nullopt, a.seed);
  emit(doc.dump(2), a.summary);
  return kExitOk;
}

struct OracleArgs {
  json config = json::object();
  std::uint64_t seed = 1;
  std::string out;
};

int run_oracle(OracleArgs a) {
  Manifest manifest("oracle");
  a.config["seed"] = a.seed;
  char* text = nullptr;
  const std::string cfg = a.config.dump();
  check(tv_oracle_run(cfg.c_str(), &text), "oracle");
  json doc = json::parse(take_string(text));
  doc["schema"] = "treeval.oracle/1";
  doc["manifest"] = manifest.finish(a.config, std::nullopt, a.seed);
  emit(doc.dump(2), a.out);
  if (doc.value("mismatches", 0) != 0 || doc.value("fast_path_differences", 0) != 0) {
    std::cerr << "oracle: analytic sets disagree with brute-force refits\n";
    return kExitRuntime;
  }
  return kExitOk;
}

// Copies an option into the JSON config only when it was given.
template <typename T>
void forward(CLI::Option* opt, const T& value, json& config, const char* key) {
  if (opt->count() > 0) config[key] = value;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"treeval: CART regression trees with selective inference"};
  app.set_version_flag("--version", std::string(tv_version()));
  app.require_subcommand(1);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a pruned regression tree to a CSV file");
  fit_cmd->add_option("data", fit.data, "CSV file with a header row")->required()
      ->check(CLI::ExistingFile);
  fit_cmd->add_option("--response", fit.response, "Response column name")
      ->capture_default_str();
  fit_cmd->add_option("--lambda", fit.lambda, "Complexity penalty")
      ->check(CLI::NonNegativeNumber)->capture_default_str();
  fit_cmd->add_option("--max-level", fit.max_level, "Maximum depth")
      ->check(CLI::NonNegativeNumber)->capture_default_str();
  fit_cmd->add_option("--min-node", fit.min_node, "Minimum observations per child")
      ->check(CLI::PositiveNumber)->capture_default_str();
  fit_cmd->add_option("--min-gain", fit.min_gain, "Minimum gain for a split")
      ->check(CLI::NonNegativeNumber)->capture_default_str();
  fit_cmd->add_option("--out", fit.out, "Output path (default stdout)");

  TestArgs test;
  double sigma = 0.0;
  auto* test_cmd = app.add_subcommand("test", "p-values and confidence intervals for a fitted tree");
  test_cmd->add_option("tree", test.tree, "Tree JSON produced by `fit`")->required()
      ->check(CLI::ExistingFile);
  test_cmd->add_option("data", test.data, "CSV the tree was fitted on")->required()
      ->check(CLI::ExistingFile);
  test_cmd->add_option("--response", test.response, "Response column (default: from tree)");
  test_cmd->add_option("--split", test.splits, "Internal region whose split to test")
      ->check(CLI::NonNegativeNumber);
  test_cmd->add_option("--region", test.regions, "Region whose mean to test")
      ->check(CLI::NonNegativeNumber);
  auto* sigma_opt =
      test_cmd->add_option("--sigma", sigma, "Known noise standard deviation")
          ->check(CLI::PositiveNumber);
  test_cmd->add_flag("--estimate-sigma", test.estimate_sigma,
                     "Use the sample standard deviation of the response");
  test_cmd->add_option("--alpha", test.alpha, "Miscoverage level")
      ->check(CLI::Range(0.0, 1.0))->capture_default_str();
  test_cmd->add_option("--null-value", test.null_value, "Null mean for region tests")
      ->capture_default_str();
  test_cmd->add_option("--mode", test.mode, "Region conditioning: identity, full or budget:K")
      ->capture_default_str();
  test_cmd->add_option("--out", test.out, "Output path (default stdout)");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Run a simulation study");
  sim_cmd->add_option("study", sim.study, "null, power or coverage")->required()
      ->check(CLI::IsMember({"null", "power", "coverage"}));
  int n = 0, p = 0, replicates = 0, max_level = 0, min_node = 0, threads = 0;
  double sim_sigma = 0, lambda = 0, min_gain = 0, alpha = 0;
  bool sim_estimate = false;
  std::string mode;
  std::vector<double> a_values, b_values;
  auto* o_n = sim_cmd->add_option("--n", n, "Observations per replicate")
                  ->check(CLI::PositiveNumber);
  auto* o_p = sim_cmd->add_option("--p", p, "Covariates")->check(CLI::PositiveNumber);
  auto* o_sigma = sim_cmd->add_option("--sigma", sim_sigma, "Noise standard deviation")
                      ->check(CLI::PositiveNumber);
  auto* o_lambda = sim_cmd->add_option("--lambda", lambda, "Complexity penalty")
                       ->check(CLI::NonNegativeNumber);
  auto* o_ml = sim_cmd->add_option("--max-level", max_level, "Maximum depth")
                   ->check(CLI::NonNegativeNumber);
  auto* o_mn = sim_cmd->add_option("--min-node", min_node, "Minimum observations per child")
                   ->check(CLI::PositiveNumber);
  auto* o_mg = sim_cmd->add_option("--min-gain", min_gain, "Minimum gain for a split")
                   ->check(CLI::NonNegativeNumber);
  auto* o_alpha = sim_cmd->add_option("--alpha", alpha, "Miscoverage level")
                      ->check(CLI::Range(0.0, 1.0));
  auto* o_est = sim_cmd->add_flag("--estimate-sigma", sim_estimate,
                                  "Estimate sigma from each replicate");
  auto* o_mode = sim_cmd->add_option("--mode", mode, "identity, full or budget:K");
  auto* o_rep = sim_cmd->add_option("--replicates", replicates, "Replicates per (a, b) cell")
                    ->check(CLI::PositiveNumber);
  auto* o_a = sim_cmd->add_option("--a", a_values, "Values of the effect ratio a");
  auto* o_b = sim_cmd->add_option("--b", b_values, "Values of the effect size b");
  auto* o_thr = sim_cmd->add_option("--threads", threads, "Worker threads (0: automatic)")
                    ->check(CLI::NonNegativeNumber);
  sim_cmd->add_option("--seed", sim.seed, "Seed for all randomness")->capture_default_str();
  sim_cmd->add_option("--out", sim.out, "Per-replicate CSV output path");
  sim_cmd->add_option("--summary", sim.summary, "Summary JSON path (default stdout)");

  OracleArgs oracle;
  int instances = 0, n_min = 0, n_max = 0, p_max = 0, o_level = 0, grid = 0;
  std::vector<double> lambdas;
  auto* ora_cmd = app.add_subcommand(
      "oracle", "Check truncation sets against brute-force refits on small instances");
  auto* q_inst = ora_cmd->add_option("--instances", instances, "Random instances")
                     ->check(CLI::PositiveNumber);
  auto* q_nmin = ora_cmd->add_option("--n-min", n_min, "Smallest sample size")
                     ->check(CLI::PositiveNumber);
  auto* q_nmax = ora_cmd->add_option("--n-max", n_max, "Largest sample size")
                     ->check(CLI::PositiveNumber);
  auto* q_pmax = ora_cmd->add_option("--p-max", p_max, "Largest number of covariates")
                     ->check(CLI::PositiveNumber);
  auto* q_ml = ora_cmd->add_option("--max-level", o_level, "Maximum depth")
                   ->check(CLI::NonNegativeNumber);
  auto* q_grid = ora_cmd->add_option("--grid", grid, "Grid points per contrast")
                     ->check(CLI::PositiveNumber);
  auto* q_lam = ora_cmd->add_option("--lambda", lambdas, "Penalties to cycle through")
                    ->check(CLI::NonNegativeNumber);
  ora_cmd->add_option("--seed", oracle.seed, "Seed for all randomness")->capture_default_str();
  ora_cmd->add_option("--out", oracle.out, "Report path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*fit_cmd) return run_fit(fit);
    if (*test_cmd) {
      if (sigma_opt->count() > 0) test.sigma = sigma;
      return run_test(test);
    }
    if (*sim_cmd) {
      json& c = sim.config;
      forward(o_n, n, c, "n");
      forward(o_p, p, c, "p");
      forward(o_sigma, sim_sigma, c, "sigma");
      forward(o_lambda, lambda, c, "lambda");
      forward(o_ml, max_level, c, "max_level");
      forward(o_mn, min_node, c, "min_node_size");
      forward(o_mg, min_gain, c, "min_gain");
      forward(o_alpha, alpha, c, "alpha");
      forward(o_est, sim_estimate, c, "estimate_sigma");
      forward(o_mode, mode, c, "mode");
      forward(o_rep, replicates, c, "replicates");
      forward(o_a, a_values, c, "a_values");
      forward(o_b, b_values, c, "b_values");
      forward(o_thr, threads, c, "threads");
      return run_simulate(std::move(sim));
    }
    if (*ora_cmd) {
      json& c = oracle.config;
      forward(q_inst, instances, c, "instances");
      forward(q_nmin, n_min, c, "n_min");
      forward(q_nmax, n_max, c, "n_max");
      forward(q_pmax, p_max, c, "p_max");
      forward(q_ml, o_level, c, "max_level");
      forward(q_grid, grid, c, "grid_points");
      forward(q_lam, lambdas, c, "lambdas");
      return run_oracle(std::move(oracle));
    }
  } catch (const Failure& f) {
    std::cerr << "treeval: " << f.message << '\n';
    return f.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "treeval: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}
