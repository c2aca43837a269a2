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

#ifndef TREEVAL_ORACLE_HPP_
#define TREEVAL_ORACLE_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"
#include "treeval/cart.hpp"
#include "treeval/contrast.hpp"
#include "treeval/dataset.hpp"
#include "treeval/intervals.hpp"
#include "treeval/truncation.hpp"

// Brute-force reference computations. Slow by design; used to validate the
// analytic sets, never on production paths.
namespace treeval::oracle {

struct GridSpec {
  double lo = -1.0;
  double hi = 1.0;
  int count = 2001;

  // Equispaced points, plus far probes at -+1e6.
  std::vector<double> points(bool far_probes = true) const;
};

inline constexpr double kGridHalfWidthSd = 8.0;
inline constexpr double kFarProbe = 1e6;

// stat -+ 8 sigma ||nu||.
GridSpec default_grid(const Contrast& nu, std::span<const double> y, double sigma);

enum class EventKind {
  kSiblings,  // region_a and region_b are siblings
  kRegion,    // region_a is a region of the tree
  kBranch,    // every region of `branch` is in the tree, nested
};

struct Event {
  EventKind kind = EventKind::kSiblings;
  std::vector<int> region_a;
  std::vector<int> region_b;
  Branch branch;
};

bool event_holds(const Tree& t, const Event& e);

// Refits grow + prune at y'(phi) for every phi and evaluates the event.
std::vector<char> brute_force_membership(const Dataset& d, std::span<const double> y,
                                         const StoppingRule& stop, double lambda,
                                         const Contrast& nu, const Event& e,
                                         std::span<const double> phis);

// Coefficients of gain(y'(phi)) from the explicit n x n matrix
// M = P_left + P_right - P_region.
CoefficientTriple dense_gain_quadratic(std::span<const int> region, const Dataset& d,
                                       int feature, int rank, const Contrast& nu,
                                       std::span<const double> y);
// v' M v for the same matrix.
double dense_quadratic_form(std::span<const int> region, const Dataset& d, int feature,
                            int rank, std::span<const double> v);

struct Agreement {
  std::size_t probes = 0;
  std::size_t excluded = 0;
  std::size_t mismatches = 0;
  double first_mismatch = 0.0;
};

// Probes within `exclusion` of a finite endpoint of `analytic` are skipped.
Agreement compare_membership(const IntervalSet& analytic, std::span<const double> phis,
                             std::span<const char> brute, double exclusion);

struct StudyConfig {
  int instances = 50;
  std::uint64_t seed = 1;
  int n_min = 10;
  int n_max = 20;
  int p_max = 2;
  int max_level = 3;
  int grid_points = 2001;
  std::vector<double> lambdas = {0.0, 0.5, 2.0};
};

struct StudyReport {
  int instances = 0;
  std::size_t sibling_sets = 0;
  std::size_t region_sets = 0;
  std::size_t probes = 0;
  std::size_t excluded = 0;
  std::size_t mismatches = 0;
  std::size_t fast_path_checks = 0;
  std::size_t fast_path_differences = 0;
  std::size_t fast_path_fallbacks = 0;
  double seconds = 0.0;
  nlohmann::json failures = nlohmann::json::array();

  nlohmann::json to_json() const;
};

// Random desk-scale instances; every split's sibling set and every
// non-root region's identity set are checked against the brute-force
// refit, and each sibling set is recomputed without the fast path.
StudyReport run_study(const StudyConfig& cfg);

}  // namespace treeval::oracle

#endif  // TREEVAL_ORACLE_HPP_
