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

#ifndef TREEVAL_SIM_HPP_
#define TREEVAL_SIM_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "treeval/cart.hpp"
#include "treeval/dataset.hpp"
#include "treeval/truncation.hpp"

namespace treeval::sim {

struct SimConfig {
  int n = 100;
  int p = 5;
  double sigma = 5.0;
  double lambda = 200.0;
  StoppingRule stop{3, 1, 0.0};
  int replicates = 1000;  // per (a, b) cell
  std::uint64_t seed = 1;
  double alpha = 0.05;
  bool estimate_sigma = false;
  PermutationSpec mode;
  std::vector<double> a_values = {0.5, 1.0, 2.0};
  std::vector<double> b_values = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  bool selective = true;
  bool naive = true;
  bool sample_split = true;
  int threads = 0;  // 0: TREEVAL_THREADS or hardware concurrency

  void validate() const;
  nlohmann::json to_json() const;
};

// b * 1(x1 <= 0) * (1 + a * 1(x2 > 0) + 1(x2 * x3 > 0)).
double true_mean(double a, double b, double x1, double x2, double x3);

struct SimData {
  Dataset data;
  std::vector<double> mu;
};

// Standard normal covariates, response mu + sigma * noise. Needs p >= 3.
SimData generate(const SimConfig& cfg, double a, double b, std::mt19937_64& rng);

// Rows: the two sides of the true split. Columns: left, right, neither of
// the estimated split.
using Table2x3 = std::array<std::array<long, 3>, 2>;

double adjusted_rand(const Table2x3& tab);

// One-sample Kolmogorov-Smirnov distance from Uniform(0, 1).
double ks_uniform(std::vector<double> p);
// Asymptotic 1% critical value 1.6276 / sqrt(N).
double ks_critical_1pct(std::size_t count);

// Worker count from TREEVAL_THREADS, defaulting to the hardware.
int default_threads();

struct SimRow {
  std::size_t replicate = 0;
  double a = 0.0;
  double b = 0.0;
  std::string method;
  std::string target;
  int level = 0;
  double statistic = std::nan("");
  double parameter = std::nan("");
  double p_value = std::nan("");
  double ci_lo = std::nan("");
  double ci_hi = std::nan("");
  int covered = -1;
  double ari = std::nan("");
  int detected = -1;
  int rejected = -1;
};

struct StudyResult {
  std::string study;
  std::vector<SimRow> rows;
  std::size_t errors = 0;
  std::size_t skipped = 0;
  nlohmann::json summary;
};

StudyResult run_null_study(const SimConfig& cfg);
StudyResult run_power_study(const SimConfig& cfg);
StudyResult run_coverage_study(const SimConfig& cfg);
StudyResult run_study(const std::string& name, const SimConfig& cfg);

void write_csv(const StudyResult& r, const std::string& path);
std::string to_csv(const StudyResult& r);

}  // namespace treeval::sim

#endif  // TREEVAL_SIM_HPP_
