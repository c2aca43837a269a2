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

#ifndef TREEVAL_INFERENCE_HPP_
#define TREEVAL_INFERENCE_HPP_

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "treeval/cart.hpp"
#include "treeval/contrast.hpp"
#include "treeval/dataset.hpp"
#include "treeval/intervals.hpp"
#include "treeval/truncation.hpp"

namespace treeval {

// N(mean, sd^2) restricted to a finite union of intervals. Masses are kept
// in log space so supports far into a tail still normalize.
class TruncatedNormal {
 public:
  TruncatedNormal(double mean, double sd, IntervalSet support);

  double mean() const { return mean_; }
  double sd() const { return sd_; }
  const IntervalSet& support() const { return support_; }
  double log_total_mass() const { return log_total_; }

  double cdf(double x) const;
  // P(X >= x), computed directly rather than as 1 - cdf.
  double sf(double x) const;

 private:
  double log_mass_between(double lo, double hi) const;

  double mean_;
  double sd_;
  IntervalSet support_;
  double log_total_;
};

double tn_cdf(double x, const TruncatedNormal& tn);

// Two-sided p-value P(|X - center| >= |stat - center|) under `tn_null`.
// Throws kInconsistent when stat lies outside the support beyond rounding.
double p_sibling(double stat, const TruncatedNormal& tn_null);
double p_region(double stat, double center, const TruncatedNormal& tn_null);

struct ConfidenceInterval {
  double lo = 0.0;
  double hi = 0.0;
};

inline constexpr int kBisectionIterations = 64;
inline constexpr double kBracketLimitSd = 50.0;

// Endpoints m with F(stat; m) = 1 - alpha/2 (lo) and alpha/2 (hi). An
// endpoint whose root lies beyond stat -+ 50 sd is reported as -+inf.
ConfidenceInterval selective_ci(double stat, double sd, const IntervalSet& support,
                                double alpha);

// Sample standard deviation with n - 1 denominator.
double estimate_sigma(std::span<const double> y);

struct NaiveResult {
  double p_value = 1.0;
  double lo = 0.0;
  double hi = 0.0;
};

NaiveResult naive_z(double stat, double sd, double alpha);

enum class SigmaSource { kGiven, kEstimated };

struct InferenceOptions {
  double alpha = 0.05;
  double null_value = 0.0;  // region tests only
  PermutationSpec mode;
  TruncationOptions truncation;
};

struct InferenceResult {
  std::string target;  // "split" or "region"
  ContrastKind kind = ContrastKind::kSibling;
  int region_a = -1;
  int region_b = -1;
  int level = 0;
  std::size_t count_a = 0;
  std::size_t count_b = 0;
  double statistic = 0.0;
  double null_value = 0.0;
  double sigma = 0.0;
  SigmaSource sigma_source = SigmaSource::kGiven;
  double sd = 0.0;
  double alpha = 0.05;
  double p_value = 1.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  NaiveResult naive;
  IntervalSet truncation;
  std::string mode;
};

// Difference in means between the two children of internal region
// `parent_id` (side-1 child minus side-0 child).
InferenceResult infer_split(const Tree& t, int parent_id, const Dataset& d,
                            std::span<const double> y, double sigma,
                            const InferenceOptions& opts = {});
InferenceResult infer_region(const Tree& t, int region_id, const Dataset& d,
                             std::span<const double> y, double sigma,
                             const InferenceOptions& opts = {});

// Every split and every region of `t`, splits first in region id order.
std::vector<InferenceResult> infer_all(const Tree& t, const Dataset& d,
                                       std::span<const double> y, double sigma,
                                       const InferenceOptions& opts = {});

nlohmann::json to_json(const InferenceResult& r);

}  // namespace treeval

#endif  // TREEVAL_INFERENCE_HPP_
