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

#include "treeval/cart.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "treeval/error.hpp"

namespace treeval {
namespace {

constexpr double kTieTolerance = 1e-10;

void fill_stats(Region& r, std::span<const double> y) {
  double sum = 0.0;
  for (int i : r.members) sum += y[i];
  r.sum = sum;
  r.mean = r.members.empty() ? 0.0 : sum / static_cast<double>(r.members.size());
  double sse = 0.0;
  for (int i : r.members) {
    const double dv = y[i] - r.mean;
    sse += dv * dv;
  }
  r.sse = sse;
}

// Gain of splitting `parent` into `left` and the complement, from the
// centered left sum. Non-negative by construction.
double partition_gain(std::span<const int> parent, std::span<const int> left,
                      std::span<const double> y) {
  const double n = static_cast<double>(parent.size());
  const double nl = static_cast<double>(left.size());
  const double nr = n - nl;
  if (nl == 0.0 || nr == 0.0) return 0.0;
  double sum = 0.0;
  for (int i : parent) sum += y[i];
  const double mean = sum / n;
  double sl = 0.0;
  for (int i : left) sl += y[i] - mean;
  return sl * sl * n / (nl * nr);
}

Tree canonicalize(const std::vector<Region>& arena, int root, std::span<const double> y) {
  Tree t;
  std::vector<int> remap(arena.size(), -1);
  std::vector<int> order;
  order.reserve(arena.size());
  std::function<void(int)> visit = [&](int id) {
    const Region& r = arena[id];
    if (!r.terminal()) {
      visit(r.left);
      visit(r.right);
    }
    remap[id] = static_cast<int>(order.size());
    order.push_back(id);
  };
  visit(root);
  t.regions.reserve(order.size());
  for (int old_id : order) {
    Region r = arena[old_id];
    r.id = remap[old_id];
    r.parent = r.parent >= 0 ? remap[r.parent] : -1;
    if (!r.terminal()) {
      r.left = remap[r.left];
      r.right = remap[r.right];
    } else {
      r.left = r.right = -1;
      r.split_feature = -1;
      r.split_rank = 0;
      r.threshold = 0.0;
    }
    fill_stats(r, y);
    t.regions.push_back(std::move(r));
  }
  t.root = remap[root];
  return t;
}

double subtree_gain_impl(const std::vector<Region>& regs, int id, std::span<const double> y) {
  const Region& r = regs[id];
  if (r.terminal()) return 0.0;
  return partition_gain(r.members, regs[r.left].members, y) +
         subtree_gain_impl(regs, r.left, y) + subtree_gain_impl(regs, r.right, y);
}

std::size_t count_terminals_impl(const std::vector<Region>& regs, int id) {
  const Region& r = regs[id];
  if (r.terminal()) return 1;
  return count_terminals_impl(regs, r.left) + count_terminals_impl(regs, r.right);
}

void split_members(const Dataset& d, std::span<const int> members, int feature,
                   double threshold, std::vector<int>& left, std::vector<int>& right) {
  const auto col = d.column(feature);
  for (int i : members) {
    (col[i] <= threshold ? left : right).push_back(i);
  }
}

}  // namespace

void validate(const StoppingRule& stop) {
  if (stop.max_level < 0) throw Error(ErrorCode::kInvalidArgument, "max_level must be >= 0");
  if (stop.min_node_size < 1) {
    throw Error(ErrorCode::kInvalidArgument, "min_node_size must be >= 1");
  }
  if (!(stop.min_gain >= 0.0) || !std::isfinite(stop.min_gain)) {
    throw Error(ErrorCode::kInvalidArgument, "min_gain must be finite and >= 0");
  }
}

const Region& Tree::region(int id) const {
  if (id < 0 || id >= static_cast<int>(regions.size())) {
    throw Error(ErrorCode::kOutOfRange, "region id " + std::to_string(id) + " not in tree");
  }
  return regions[id];
}

std::vector<int> Tree::terminals(int id) const {
  std::vector<int> out;
  std::vector<int> stack{id};
  region(id);
  while (!stack.empty()) {
    const int cur = stack.back();
    stack.pop_back();
    const Region& r = regions[cur];
    if (r.terminal()) {
      out.push_back(cur);
    } else {
      stack.push_back(r.right);
      stack.push_back(r.left);
    }
  }
  return out;
}

std::vector<int> Tree::descendants(int id) const {
  std::vector<int> out;
  const Region& top = region(id);
  if (top.terminal()) return out;
  std::vector<int> stack{top.left, top.right};
  while (!stack.empty()) {
    const int cur = stack.back();
    stack.pop_back();
    out.push_back(cur);
    const Region& r = regions[cur];
    if (!r.terminal()) {
      stack.push_back(r.left);
      stack.push_back(r.right);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> Tree::ancestors(int id) const {
  std::vector<int> out;
  for (int cur = region(id).parent; cur >= 0; cur = regions[cur].parent) out.push_back(cur);
  return out;
}

bool Tree::is_ancestor(int ancestor, int descendant) const {
  for (int cur = region(descendant).parent; cur >= 0; cur = regions[cur].parent) {
    if (cur == ancestor) return true;
  }
  return false;
}

int Tree::sibling(int id) const {
  const Region& r = region(id);
  if (r.parent < 0) return -1;
  const Region& p = regions[r.parent];
  return p.left == id ? p.right : p.left;
}

std::optional<int> Tree::find_by_members(std::span<const int> members) const {
  for (const Region& r : regions) {
    if (r.members.size() == members.size() &&
        std::equal(r.members.begin(), r.members.end(), members.begin())) {
      return r.id;
    }
  }
  return std::nullopt;
}

std::vector<int> Tree::internal_regions() const {
  std::vector<int> out;
  for (const Region& r : regions) {
    if (!r.terminal()) out.push_back(r.id);
  }
  return out;
}

double region_sse(std::span<const int> members, std::span<const double> y) {
  if (members.empty()) return 0.0;
  double sum = 0.0;
  for (int i : members) sum += y[i];
  const double mean = sum / static_cast<double>(members.size());
  double sse = 0.0;
  for (int i : members) sse += (y[i] - mean) * (y[i] - mean);
  return sse;
}

double gain(const Dataset& d, std::span<const int> members, int feature, int rank,
            std::span<const double> y) {
  const double threshold = d.order_statistic(feature, rank);
  std::vector<int> left;
  std::vector<int> right;
  split_members(d, members, feature, threshold, left, right);
  if (left.empty() || right.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "split (feature " + std::to_string(feature) + ", rank " +
                    std::to_string(rank) + ") leaves an empty child");
  }
  return partition_gain(members, left, y);
}

std::optional<SplitChoice> best_split(const Dataset& d, std::span<const int> members,
                                      std::span<const double> y, int min_node_size) {
  const std::size_t total = members.size();
  if (total < 2) return std::nullopt;
  const std::size_t n = d.n();
  std::vector<char> in_region(n, 0);
  double sum = 0.0;
  for (int i : members) {
    in_region[i] = 1;
    sum += y[i];
  }
  const double mean = sum / static_cast<double>(total);
  double sse = 0.0;
  for (int i : members) sse += (y[i] - mean) * (y[i] - mean);
  const double tol = kTieTolerance * sse;
  const double nn = static_cast<double>(total);
  const std::size_t min_node = static_cast<std::size_t>(min_node_size);

  std::optional<SplitChoice> best;
  for (std::size_t j = 0; j < d.p(); ++j) {
    const auto idx = d.sort_index(j);
    std::size_t cnt = 0;
    std::size_t last_cnt = 0;
    double sl = 0.0;
    std::size_t pos = 0;
    while (pos < n) {
      const std::size_t end = static_cast<std::size_t>(d.tie_end(j, pos));
      for (std::size_t q = pos; q <= end; ++q) {
        const int i = idx[q];
        if (in_region[i]) {
          ++cnt;
          sl += y[i] - mean;
        }
      }
      pos = end + 1;
      if (cnt == total) break;
      if (cnt == last_cnt) continue;
      last_cnt = cnt;
      if (cnt < min_node || total - cnt < min_node) continue;
      const double nl = static_cast<double>(cnt);
      const double g = sl * sl * nn / (nl * (nn - nl));
      if (!best || g > best->gain + tol) {
        best = SplitChoice{static_cast<int>(j), static_cast<int>(end) + 1, g,
                           static_cast<int>(cnt)};
      }
    }
  }
  return best;
}

Tree grow(const Dataset& d, std::span<const double> y, const StoppingRule& stop) {
  validate(stop);
  if (y.size() != d.n()) {
    throw Error(ErrorCode::kInvalidArgument, "response length does not match dataset");
  }
  std::vector<Region> arena;
  Region root;
  root.id = 0;
  root.members.resize(d.n());
  for (std::size_t i = 0; i < d.n(); ++i) root.members[i] = static_cast<int>(i);
  arena.push_back(std::move(root));

  std::vector<int> pending{0};
  while (!pending.empty()) {
    const int id = pending.back();
    pending.pop_back();
    const std::size_t count = arena[id].members.size();
    if (arena[id].level >= stop.max_level) continue;
    if (count < 2 || count < 2 * static_cast<std::size_t>(stop.min_node_size)) continue;
    const auto choice = best_split(d, arena[id].members, y, stop.min_node_size);
    if (!choice || choice->gain < stop.min_gain) continue;

    const double threshold = d.order_statistic(choice->feature, choice->rank);
    Region left;
    Region right;
    split_members(d, arena[id].members, choice->feature, threshold, left.members,
                  right.members);
    left.parent = right.parent = id;
    left.level = right.level = arena[id].level + 1;
    left.from_parent = Split{choice->feature, choice->rank, 1};
    right.from_parent = Split{choice->feature, choice->rank, 0};
    const int left_id = static_cast<int>(arena.size());
    left.id = left_id;
    right.id = left_id + 1;
    arena[id].left = left_id;
    arena[id].right = left_id + 1;
    arena[id].split_feature = choice->feature;
    arena[id].split_rank = choice->rank;
    arena[id].threshold = threshold;
    arena.push_back(std::move(left));
    arena.push_back(std::move(right));
    pending.push_back(left_id + 1);
    pending.push_back(left_id);
  }
  Tree t = canonicalize(arena, 0, y);
  t.stop = stop;
  return t;
}

bool is_bottom_up_ordering(const Tree& t, std::span<const int> order) {
  if (order.size() != t.size()) return false;
  std::vector<int> pos(t.size(), -1);
  for (std::size_t k = 0; k < order.size(); ++k) {
    const int id = order[k];
    if (id < 0 || id >= static_cast<int>(t.size()) || pos[id] >= 0) return false;
    pos[id] = static_cast<int>(k);
  }
  for (const Region& r : t.regions) {
    if (r.parent >= 0 && pos[r.id] > pos[r.parent]) return false;
  }
  return true;
}

std::vector<int> bottom_up_ordering(const Tree& t, std::span<const int> tail) {
  if (!tail.empty()) {
    if (tail.back() != t.root) {
      throw Error(ErrorCode::kInvalidArgument, "ordering tail must end at the root");
    }
    for (std::size_t k = 0; k + 1 < tail.size(); ++k) {
      if (t.region(tail[k]).parent != tail[k + 1]) {
        throw Error(ErrorCode::kInvalidArgument,
                    "ordering tail is not a parent chain ending at the root");
      }
    }
  }
  std::vector<char> in_tail(t.size(), 0);
  for (int id : tail) in_tail[t.region(id).id] = 1;
  std::vector<int> order;
  order.reserve(t.size());
  for (const Region& r : t.regions) {
    if (!in_tail[r.id]) order.push_back(r.id);
  }
  order.insert(order.end(), tail.begin(), tail.end());
  return order;
}

double subtree_gain(const Tree& t, int id, std::span<const double> y) {
  t.region(id);
  return subtree_gain_impl(t.regions, id, y);
}

double g_value(const Tree& t, int id, std::span<const double> y) {
  const Region& r = t.region(id);
  if (r.terminal()) {
    throw Error(ErrorCode::kInvalidArgument,
                "g is undefined for terminal region " + std::to_string(id));
  }
  const double terms = static_cast<double>(count_terminals_impl(t.regions, id));
  return subtree_gain_impl(t.regions, id, y) / (terms - 1.0);
}

Tree prune(const Tree& t, std::span<const double> y, double lambda,
           std::span<const int> order, std::optional<std::size_t> steps) {
  if (!(lambda >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "lambda must be >= 0");
  if (!is_bottom_up_ordering(t, order)) {
    throw Error(ErrorCode::kInvalidArgument, "pruning order is not a bottom-up ordering");
  }
  std::vector<Region> work = t.regions;
  const std::size_t k_max = std::min(steps.value_or(order.size()), order.size());
  for (std::size_t k = 0; k < k_max; ++k) {
    Region& r = work[order[k]];
    if (r.terminal()) continue;
    const double terms = static_cast<double>(count_terminals_impl(work, r.id));
    const double g = subtree_gain_impl(work, r.id, y) / (terms - 1.0);
    if (g < lambda) {
      r.left = r.right = -1;
    }
  }
  Tree out = canonicalize(work, t.root, y);
  out.lambda = lambda;
  out.stop = t.stop;
  return out;
}

Tree fit(const Dataset& d, std::span<const double> y, const StoppingRule& stop,
         double lambda) {
  Tree full = grow(d, y, stop);
  const auto order = bottom_up_ordering(full);
  return prune(full, y, lambda, order);
}

int terminal_region_of(const Tree& t, std::span<const double> x) {
  int cur = t.root;
  while (!t.regions[cur].terminal()) {
    const Region& r = t.regions[cur];
    if (r.split_feature >= static_cast<int>(x.size())) {
      throw Error(ErrorCode::kInvalidArgument, "covariate vector too short");
    }
    cur = x[r.split_feature] <= r.threshold ? r.left : r.right;
  }
  return cur;
}

double predict(const Tree& t, std::span<const double> x) {
  return t.regions[terminal_region_of(t, x)].mean;
}

std::vector<int> members_from_path(const Tree& t, const Dataset& d, int id) {
  std::vector<int> chain{id};
  for (int a : t.ancestors(id)) chain.push_back(a);
  std::vector<int> out;
  for (std::size_t i = 0; i < d.n(); ++i) {
    bool inside = true;
    for (std::size_t k = 0; k + 1 < chain.size() && inside; ++k) {
      const Split& s = t.regions[chain[k]].from_parent;
      const double thr = d.order_statistic(s.feature, s.rank);
      const bool le = d.x(i, s.feature) <= thr;
      inside = (s.side == 1) == le;
    }
    if (inside) out.push_back(static_cast<int>(i));
  }
  return out;
}

nlohmann::json tree_to_json(const Tree& t, const Dataset& d) {
  nlohmann::json regions = nlohmann::json::array();
  for (const Region& r : t.regions) {
    nlohmann::json jr = {{"id", r.id},
                         {"parent", r.parent >= 0 ? nlohmann::json(r.parent) : nlohmann::json()},
                         {"level", r.level},
                         {"n", r.count()},
                         {"mean", r.mean},
                         {"sse", r.sse}};
    if (r.from_parent.feature >= 0) {
      jr["split"] = {{"feature", r.from_parent.feature},
                     {"feature_name", d.feature_names()[r.from_parent.feature]},
                     {"rank", r.from_parent.rank},
                     {"threshold", d.order_statistic(r.from_parent.feature, r.from_parent.rank)},
                     {"side", r.from_parent.side}};
    } else {
      jr["split"] = nullptr;
    }
    jr["children"] = r.terminal() ? nlohmann::json::array()
                                  : nlohmann::json::array({r.left, r.right});
    regions.push_back(std::move(jr));
  }
  return {{"schema", "treeval.tree/1"},
          {"n", d.n()},
          {"p", d.p()},
          {"response", d.response_name()},
          {"lambda", t.lambda},
          {"stopping",
           {{"max_level", t.stop.max_level},
            {"min_node_size", t.stop.min_node_size},
            {"min_gain", t.stop.min_gain}}},
          {"root", t.root},
          {"regions", std::move(regions)}};
}

Tree tree_from_json(const nlohmann::json& j, const Dataset& d, std::span<const double> y) {
  try {
    if (j.value("schema", "") != "treeval.tree/1") {
      throw Error(ErrorCode::kParse, "not a treeval.tree/1 document");
    }
    if (j.at("n").get<std::size_t>() != d.n() || j.at("p").get<std::size_t>() != d.p()) {
      throw Error(ErrorCode::kInconsistent, "tree was fitted on a dataset of different shape");
    }
    const auto& jregions = j.at("regions");
    const std::size_t k = jregions.size();
    std::vector<const nlohmann::json*> by_id(k, nullptr);
    for (const auto& jr : jregions) {
      const int id = jr.at("id").get<int>();
      if (id < 0 || id >= static_cast<int>(k) || by_id[id]) {
        throw Error(ErrorCode::kParse, "region ids must be a permutation of 0..K-1");
      }
      by_id[id] = &jr;
    }
    const int root = j.at("root").get<int>();
    if (root < 0 || root >= static_cast<int>(k)) {
      throw Error(ErrorCode::kParse, "root id out of range");
    }

    std::vector<Region> arena(k);
    std::vector<char> seen(k, 0);
    std::function<void(int, int)> build = [&](int id, int parent) {
      if (seen[id]) throw Error(ErrorCode::kParse, "region graph is not a tree");
      seen[id] = 1;
      const auto& jr = *by_id[id];
      Region& r = arena[id];
      r.id = id;
      r.parent = parent;
      r.level = parent >= 0 ? arena[parent].level + 1 : 0;
      const auto& kids = jr.at("children");
      if (kids.empty()) return;
      if (kids.size() != 2) throw Error(ErrorCode::kParse, "regions have zero or two children");
      const int l = kids[0].get<int>();
      const int rr = kids[1].get<int>();
      const auto& ls = by_id.at(l)->at("split");
      const auto& rs = by_id.at(rr)->at("split");
      const int feature = ls.at("feature").get<int>();
      const int rank = ls.at("rank").get<int>();
      if (rs.at("feature").get<int>() != feature || rs.at("rank").get<int>() != rank ||
          ls.at("side").get<int>() != 1 || rs.at("side").get<int>() != 0) {
        throw Error(ErrorCode::kParse,
                    "children of region " + std::to_string(id) + " do not share one split");
      }
      const double thr = d.order_statistic(feature, rank);
      r.split_feature = feature;
      r.split_rank = rank;
      r.threshold = thr;
      r.left = l;
      r.right = rr;
      arena[l].from_parent = Split{feature, rank, 1};
      arena[rr].from_parent = Split{feature, rank, 0};
      split_members(d, r.members, feature, thr, arena[l].members, arena[rr].members);
      if (arena[l].members.empty() || arena[rr].members.empty()) {
        throw Error(ErrorCode::kInconsistent,
                    "split of region " + std::to_string(id) + " leaves an empty child");
      }
      build(l, id);
      build(rr, id);
    };
    arena[root].members.resize(d.n());
    for (std::size_t i = 0; i < d.n(); ++i) arena[root].members[i] = static_cast<int>(i);
    build(root, -1);
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
      throw Error(ErrorCode::kParse, "tree has regions unreachable from the root");
    }
    Tree t = canonicalize(arena, root, y);
    t.lambda = j.at("lambda").get<double>();
    const auto& js = j.at("stopping");
    t.stop.max_level = js.at("max_level").get<int>();
    t.stop.min_node_size = js.at("min_node_size").get<int>();
    t.stop.min_gain = js.at("min_gain").get<double>();
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed tree JSON: ") + e.what());
  }
}

}  // namespace treeval
