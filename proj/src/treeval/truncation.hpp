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

#ifndef TREEVAL_TRUNCATION_HPP_
#define TREEVAL_TRUNCATION_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "treeval/cart.hpp"
#include "treeval/contrast.hpp"
#include "treeval/dataset.hpp"
#include "treeval/intervals.hpp"

namespace treeval {

// Ordered splits from the root plus the nested regions they induce:
// regions[0] is every observation, regions[L] the target.
struct Branch {
  std::vector<Split> steps;
  std::vector<std::vector<int>> regions;

  std::size_t level() const { return steps.size(); }
  const std::vector<int>& target() const { return regions.back(); }
};

// Throws kInvalidArgument when some induced region is empty.
Branch make_branch(const Dataset& d, std::vector<Split> steps);
Branch branch_of(const Tree& t, const Dataset& d, int region_id);
// Reorders the steps: step k of the result is step perm[k] of `b`.
Branch permute(const Dataset& d, const Branch& b, std::span<const int> perm);

// gain(y'(phi)) = a*phi^2 + b*phi + c.
struct CoefficientTriple {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;

  double at(double phi) const { return (a * phi + b) * phi + c; }
};

struct Candidate {
  int feature = -1;
  int rank = 0;
  int left_count = 0;
  CoefficientTriple q;
  // Magnitudes of the terms summed into each coefficient; rounding error in
  // q is small relative to these.
  CoefficientTriple scale;
};

// Every admissible split of regions[level - 1]; `branch_index` points at the
// candidate reproducing the branch's split, or -1 when no candidate does.
struct LevelCoefficients {
  int level = 0;
  std::vector<Candidate> candidates;
  int branch_index = -1;
};

// One forward pass per (level, feature) over the sorted covariate. Throws
// kInconsistent when nu is not constant on the target, constant on the
// target's sibling side and zero elsewhere.
std::vector<LevelCoefficients> stream_coefficients(const Branch& b, const Contrast& nu,
                                                   const Dataset& d,
                                                   std::span<const double> y,
                                                   int min_node_size = 1);

void check_condition_one(const Branch& b, const Contrast& nu);

struct TruncationOptions {
  bool fast_path = true;
  bool record = false;
};

struct ConstraintRecord {
  std::string kind;  // "grow", "min_gain" or "prune"
  int level = 0;
  int feature = -1;
  int rank = 0;
  CoefficientTriple q;
  Sense sense = Sense::kLessEqual;
  IntervalSet solution;
};

struct TruncationSet {
  IntervalSet set;
  IntervalSet grow_set;
  bool fast_path = false;
  bool pruning_tree_from_fit = false;
  double phi = 0.0;  // point the pruning tree was grown at
  std::vector<ConstraintRecord> records;
};

// Intersection by running extrema; returns nullopt when some input is not a
// single interval, the complement of one, or the whole line, or when the
// complemented gaps share no common point.
std::optional<IntervalSet> fast_intersect(std::span<const IntervalSet> sets);

TruncationSet s_grow(const Branch& b, const Contrast& nu, const Dataset& d,
                     std::span<const double> y, const StoppingRule& stop,
                     const TruncationOptions& opts = {});

// Midpoint of the widest component after clipping to center +- half_width.
double select_phi(const IntervalSet& set, double center, double half_width);

struct PruningTree {
  Tree tree;
  std::vector<double> response;
  bool from_fit = false;
  double phi = 0.0;
};

// The tree pruning constraints are read from: the fitted tree when it
// contains every region of the branch, otherwise TREE_{K-L} of the tree
// grown at a point of `grow_set`.
PruningTree build_pruning_tree(const Branch& b, const Contrast& nu, double lambda,
                               const Dataset& d, std::span<const double> y,
                               const StoppingRule& stop, const Tree* fitted,
                               const IntervalSet& grow_set,
                               std::optional<double> phi = std::nullopt);

TruncationSet s_pruned(const Branch& b, const Contrast& nu, double lambda, const Dataset& d,
                       std::span<const double> y, const StoppingRule& stop,
                       const Tree* fitted, const TruncationOptions& opts = {});

// Conditioning set for the difference between region `region_a` and its
// sibling in the fitted tree `t`.
TruncationSet s_sib(const Tree& t, int region_a, const Dataset& d, std::span<const double> y,
                    const TruncationOptions& opts = {});

enum class PermutationMode { kIdentity, kBudget, kFull };

struct PermutationSpec {
  PermutationMode mode = PermutationMode::kIdentity;
  std::size_t budget = 1;
};

inline constexpr std::size_t kMaxFullPermutationLevel = 8;

// "identity", "full" or "budget:K".
PermutationSpec parse_permutation_mode(const std::string& text);
std::string to_string(const PermutationSpec& spec);
// Lexicographic order starting from the identity.
std::vector<std::vector<int>> enumerate_permutations(std::size_t level,
                                                     const PermutationSpec& spec);

TruncationSet s_reg(const Tree& t, int region_a, const Dataset& d, std::span<const double> y,
                    const PermutationSpec& spec = {}, const TruncationOptions& opts = {});

nlohmann::json to_json(const ConstraintRecord& r);

}  // namespace treeval

#endif  // TREEVAL_TRUNCATION_HPP_
