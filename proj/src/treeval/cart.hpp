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

#ifndef TREEVAL_CART_HPP_
#define TREEVAL_CART_HPP_

#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "treeval/dataset.hpp"

namespace treeval {

// Halfspace chi_{j,s,e}: side 1 keeps x_j <= x_{j,(s)}, side 0 keeps x_j > x_{j,(s)}.
// `rank` is 1-based.
struct Split {
  int feature = -1;
  int rank = 0;
  int side = 1;

  friend bool operator==(const Split&, const Split&) = default;
};

struct StoppingRule {
  int max_level = 30;
  int min_node_size = 1;
  double min_gain = 0.0;
};

void validate(const StoppingRule& stop);

struct Region {
  int id = -1;
  int parent = -1;
  int level = 0;
  Split from_parent;  // feature == -1 for the root
  int left = -1;      // child on side 1
  int right = -1;     // child on side 0
  int split_feature = -1;
  int split_rank = 0;
  double threshold = 0.0;
  std::vector<int> members;  // ascending observation indices
  double sum = 0.0;
  double mean = 0.0;
  double sse = 0.0;

  bool terminal() const { return left < 0; }
  std::size_t count() const { return members.size(); }
};

// Arena of regions, ids in post-order (every region after its descendants,
// root last).
class Tree {
 public:
  std::vector<Region> regions;
  int root = -1;
  double lambda = 0.0;
  StoppingRule stop;

  std::size_t size() const { return regions.size(); }
  const Region& region(int id) const;
  const Region& root_region() const { return region(root); }

  std::vector<int> terminals(int id) const;
  std::vector<int> descendants(int id) const;
  // Nearest ancestor first, root last.
  std::vector<int> ancestors(int id) const;
  bool is_ancestor(int ancestor, int descendant) const;
  int sibling(int id) const;
  std::optional<int> find_by_members(std::span<const int> members) const;
  // Ids of internal regions; each one owns a split.
  std::vector<int> internal_regions() const;
};

struct SplitChoice {
  int feature = -1;
  int rank = 0;
  double gain = 0.0;
  int left_count = 0;
};

// Centered sum of squares of y over `members`.
double region_sse(std::span<const int> members, std::span<const double> y);

// SSE(R) - SSE(R n chi_{j,s,1}) - SSE(R n chi_{j,s,0}). Throws when either
// child is empty.
double gain(const Dataset& d, std::span<const int> members, int feature, int rank,
            std::span<const double> y);

// Argmax of gain over admissible (j, s); ties within 1e-10 * SSE(R) go to
// the smallest (j, s). Candidates leaving fewer than `min_node_size`
// observations on either side are skipped.
std::optional<SplitChoice> best_split(const Dataset& d, std::span<const int> members,
                                      std::span<const double> y, int min_node_size = 1);

Tree grow(const Dataset& d, std::span<const double> y, const StoppingRule& stop);

// Post-order with an optional ancestor chain (R^(L-1), ..., R^(0)) moved to
// the end.
std::vector<int> bottom_up_ordering(const Tree& t, std::span<const int> tail = {});
bool is_bottom_up_ordering(const Tree& t, std::span<const int> order);

// Numerator of g: SSE(R) minus the SSE of R's terminal descendants,
// accumulated as the gains of the internal regions below R.
double subtree_gain(const Tree& t, int id, std::span<const double> y);
double g_value(const Tree& t, int id, std::span<const double> y);

// Replays cost-complexity pruning over `order`. `steps` stops after that
// many regions (the intermediate TREE_k); default runs all K.
Tree prune(const Tree& t, std::span<const double> y, double lambda,
           std::span<const int> order, std::optional<std::size_t> steps = std::nullopt);

// grow + prune with the default ordering.
Tree fit(const Dataset& d, std::span<const double> y, const StoppingRule& stop,
         double lambda);

double predict(const Tree& t, std::span<const double> x);
int terminal_region_of(const Tree& t, std::span<const double> x);

// Membership of the whole dataset in region `id`, recomputed from the
// root-to-region path.
std::vector<int> members_from_path(const Tree& t, const Dataset& d, int id);

nlohmann::json tree_to_json(const Tree& t, const Dataset& d);
// Rebuilds memberships from the recorded splits against `d`; region
// statistics are computed from `y`.
Tree tree_from_json(const nlohmann::json& j, const Dataset& d, std::span<const double> y);

}  // namespace treeval

#endif  // TREEVAL_CART_HPP_
