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

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <limits>
#include <random>
#include <set>

#include "doctest.h"
#include "support.hpp"
#include "treeval/cart.hpp"
#include "treeval/error.hpp"

using namespace treeval;
using treeval::testing::make_dataset;
using treeval::testing::random_dataset;
using treeval::testing::random_vector;

namespace {

double naive_sse(const std::vector<int>& m, std::span<const double> y) {
  if (m.empty()) return 0.0;
  double mean = 0.0;
  for (int i : m) mean += y[i];
  mean /= m.size();
  double s = 0.0;
  for (int i : m) s += (y[i] - mean) * (y[i] - mean);
  return s;
}

struct NaiveSplit {
  int feature = -1;
  int rank = 0;
  double gain = -1.0;
};

// Every (j, s) scored from scratch by partitioning on the threshold value.
std::vector<NaiveSplit> all_splits(const Dataset& d, const std::vector<int>& members,
                                   std::span<const double> y, int min_node) {
  std::vector<NaiveSplit> out;
  const double parent = naive_sse(members, y);
  for (std::size_t j = 0; j < d.p(); ++j) {
    for (std::size_t s = 1; s < d.n(); ++s) {
      if (!d.admissible_rank(j, s)) continue;
      const double thr = d.order_statistic(j, s);
      std::vector<int> l, r;
      for (int i : members) (d.x(i, j) <= thr ? l : r).push_back(i);
      if (static_cast<int>(l.size()) < min_node || static_cast<int>(r.size()) < min_node) {
        continue;
      }
      out.push_back({static_cast<int>(j), static_cast<int>(s),
                     parent - naive_sse(l, y) - naive_sse(r, y)});
    }
  }
  return out;
}

std::set<std::vector<int>> terminal_partition(const Tree& t) {
  std::set<std::vector<int>> out;
  for (const Region& r : t.regions) {
    if (r.terminal()) out.insert(r.members);
  }
  return out;
}

// Pruning replay on a bare child map, g recomputed from raw SSEs.
std::set<std::vector<int>> replay_prune(const Tree& t, std::span<const double> y,
                                        double lambda, const std::vector<int>& order) {
  std::map<int, std::pair<int, int>> kids;
  for (const Region& r : t.regions) {
    if (!r.terminal()) kids[r.id] = {r.left, r.right};
  }
  std::function<void(int, std::vector<int>&)> leaves = [&](int id, std::vector<int>& acc) {
    auto it = kids.find(id);
    if (it == kids.end()) {
      acc.push_back(id);
      return;
    }
    leaves(it->second.first, acc);
    leaves(it->second.second, acc);
  };
  for (int id : order) {
    if (!kids.count(id)) continue;
    std::vector<int> term;
    leaves(id, term);
    double h = naive_sse(t.regions[id].members, y);
    for (int l : term) h -= naive_sse(t.regions[l].members, y);
    if (h / (term.size() - 1.0) < lambda) {
      std::vector<int> stack = {id};
      std::vector<int> doomed;
      while (!stack.empty()) {
        const int cur = stack.back();
        stack.pop_back();
        auto it = kids.find(cur);
        if (it == kids.end()) continue;
        stack.push_back(it->second.first);
        stack.push_back(it->second.second);
        doomed.push_back(cur);
      }
      for (int k : doomed) kids.erase(k);
    }
  }
  std::vector<int> term;
  leaves(t.root, term);
  std::set<std::vector<int>> out;
  for (int l : term) out.insert(t.regions[l].members);
  return out;
}

void check_tree_shape(const Tree& t) {
  REQUIRE(t.regions[t.root].parent == -1);
  for (const Region& r : t.regions) {
    if (r.terminal()) {
      REQUIRE(r.right == -1);
      continue;
    }
    const Region& l = t.regions[r.left];
    const Region& rr = t.regions[r.right];
    REQUIRE(l.parent == r.id);
    REQUIRE(rr.parent == r.id);
    REQUIRE(l.id < r.id);
    REQUIRE(rr.id < r.id);
    REQUIRE(l.count() + rr.count() == r.count());
  }
}

}  // namespace

TEST_SUITE("cart") {
  TEST_CASE("gain examples") {
    const Dataset d = make_dataset({{1, 2, 3, 4}}, {0, 0, 10, 10});
    const std::vector<int> all = {0, 1, 2, 3};
    CHECK(gain(d, all, 0, 2, d.y()) == doctest::Approx(100.0));
    const Dataset flat = make_dataset({{1, 2, 3, 4}, {4, 3, 2, 1}}, {5, 5, 5, 5});
    for (int j = 0; j < 2; ++j) {
      for (int s = 1; s < 4; ++s) CHECK(gain(flat, all, j, s, flat.y()) == 0.0);
    }
  }

  TEST_CASE("gain is non-negative and matches direct SSEs") {
    std::mt19937_64 rng(1);
    for (int rep = 0; rep < 50; ++rep) {
      const Dataset d = random_dataset(rng, 12, 2);
      std::vector<int> all(12);
      std::iota(all.begin(), all.end(), 0);
      for (const auto& s : all_splits(d, all, d.y(), 1)) {
        const double g = gain(d, all, s.feature, s.rank, d.y());
        REQUIRE(g >= 0.0);
        REQUIRE(g == doctest::Approx(s.gain).epsilon(1e-10).scale(1.0));
      }
    }
  }

  TEST_CASE("best split finds the separating split") {
    const Dataset d = make_dataset({{3, 1, 4, 2}, {1, 2, 3, 4}}, {10, 0, 10, 0});
    std::vector<int> all = {0, 1, 2, 3};
    const auto s = best_split(d, all, d.y());
    REQUIRE(s);
    CHECK(s->feature == 0);
    CHECK(s->rank == 2);
    CHECK(s->gain == doctest::Approx(100.0));
  }

  TEST_CASE("identical features tie to the smaller index") {
    const std::vector<double> col = {0.3, -1.2, 2.5, 0.7, -0.1, 1.1};
    const Dataset d = make_dataset({col, col}, {1, 4, -2, 0.5, 3, -1});
    std::vector<int> all(6);
    std::iota(all.begin(), all.end(), 0);
    const auto s = best_split(d, all, d.y());
    REQUIRE(s);
    CHECK(s->feature == 0);
  }

  TEST_CASE("best split agrees with an exhaustive scan") {
    std::mt19937_64 rng(2);
    for (int rep = 0; rep < 100; ++rep) {
      Dataset d = random_dataset(rng, 15, 3);
      if (rep % 3 == 0) {
        std::vector<std::vector<double>> cols(3);
        std::uniform_int_distribution<int> small(0, 4);
        for (auto& c : cols) {
          for (int i = 0; i < 15; ++i) c.push_back(small(rng));
        }
        d = make_dataset(cols, random_vector(rng, 15));
      }
      std::vector<int> all(15);
      std::iota(all.begin(), all.end(), 0);
      const int min_node = 1 + rep % 3;
      const auto naive = all_splits(d, all, d.y(), min_node);
      const auto best = best_split(d, all, d.y(), min_node);
      if (naive.empty()) {
        REQUIRE(!best);
        continue;
      }
      REQUIRE(best);
      double top = -1.0;
      for (const auto& s : naive) top = std::max(top, s.gain);
      const double tol = 1e-9 * std::max(1.0, naive_sse(all, d.y()));
      REQUIRE(best->gain == doctest::Approx(top).epsilon(1e-10).scale(1.0));
      // First (j, s) within tolerance of the maximum.
      for (const auto& s : naive) {
        if (s.gain >= top - tol) {
          REQUIRE(best->feature == s.feature);
          REQUIRE(best->rank == s.rank);
          break;
        }
      }
    }
  }

  TEST_CASE("grow stopping rules") {
    const Dataset d = make_dataset({{1, 2, 3, 4}}, {0, 0, 10, 10});
    const Tree root_only = grow(d, d.y(), {0, 1, 0.0});
    CHECK(root_only.size() == 1);
    const Tree one = grow(d, d.y(), {1, 1, 0.0});
    REQUIRE(one.size() == 3);
    CHECK(one.root_region().split_feature == 0);
    CHECK(one.root_region().split_rank == 2);
    CHECK(one.root_region().threshold == 2.0);
    const Tree big_node = grow(d, d.y(), {5, 3, 0.0});
    CHECK(big_node.size() == 1);
    const Tree high_gain = grow(d, d.y(), {5, 1, 101.0});
    CHECK(high_gain.size() == 1);
    CHECK_THROWS_AS(validate(StoppingRule{-1, 1, 0.0}), Error);
    CHECK_THROWS_AS(validate(StoppingRule{3, 0, 0.0}), Error);
  }

  TEST_CASE("grown splits are audited against all admissible splits") {
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 40; ++rep) {
      const Dataset d = random_dataset(rng, 30, 3);
      const StoppingRule stop{3, 1 + rep % 2, 0.0};
      const Tree t = grow(d, d.y(), stop);
      check_tree_shape(t);
      for (const Region& r : t.regions) {
        const auto naive = all_splits(d, r.members, d.y(), stop.min_node_size);
        if (r.terminal()) {
          if (r.level < stop.max_level) REQUIRE(naive.empty());
          continue;
        }
        double top = 0.0;
        for (const auto& s : naive) top = std::max(top, s.gain);
        const double g = gain(d, r.members, r.split_feature, r.split_rank, d.y());
        REQUIRE(g >= top - 1e-9 * std::max(1.0, r.sse));
      }
      const Tree again = grow(d, d.y(), stop);
      REQUIRE(terminal_partition(again) == terminal_partition(t));
    }
  }

  TEST_CASE("bottom-up orderings") {
    const Dataset d = make_dataset({{1, 2, 3, 4}}, {0, 0, 10, 10});
    const Tree root_only = grow(d, d.y(), {0, 1, 0.0});
    CHECK(bottom_up_ordering(root_only) == std::vector<int>{0});
    const Tree one = grow(d, d.y(), {1, 1, 0.0});
    const auto order = bottom_up_ordering(one);
    CHECK(order.back() == one.root);
    CHECK(is_bottom_up_ordering(one, order));
    CHECK(!is_bottom_up_ordering(one, std::vector<int>{one.root, 0, 1}));

    std::mt19937_64 rng(4);
    for (int rep = 0; rep < 30; ++rep) {
      const Dataset dd = random_dataset(rng, 25, 2);
      const Tree t = grow(dd, dd.y(), {3, 1, 0.0});
      std::vector<int> chain;
      for (const Region& r : t.regions) {
        if (r.terminal() && r.level > 0) {
          chain = t.ancestors(r.id);
          break;
        }
      }
      const auto ord = bottom_up_ordering(t, chain);
      std::vector<int> pos(t.size());
      for (std::size_t k = 0; k < ord.size(); ++k) pos[ord[k]] = static_cast<int>(k);
      for (const Region& a : t.regions) {
        for (const Region& b : t.regions) {
          if (t.is_ancestor(a.id, b.id)) REQUIRE(pos[b.id] < pos[a.id]);
        }
      }
      REQUIRE(std::equal(chain.rbegin(), chain.rend(), ord.rbegin()));
    }
  }

  TEST_CASE("g values") {
    const Dataset d = make_dataset({{1, 2, 3, 4}}, {0, 0, 10, 10});
    const Tree one = grow(d, d.y(), {1, 1, 0.0});
    CHECK(g_value(one, one.root, d.y()) ==
          doctest::Approx(gain(d, one.root_region().members, 0, 2, d.y())));
    const Dataset pure = make_dataset({{1, 2, 3, 4, 5, 6}}, {0, 0, 4, 4, 9, 9});
    const Tree t = grow(pure, pure.y(), {5, 1, 0.0});
    const double sse = t.root_region().sse;
    CHECK(g_value(t, t.root, pure.y()) ==
          doctest::Approx(sse / (t.terminals(t.root).size() - 1.0)));

    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 30; ++rep) {
      const Dataset dd = random_dataset(rng, 25, 2);
      const Tree tt = grow(dd, dd.y(), {3, 1, 0.0});
      for (const Region& r : tt.regions) {
        if (r.terminal()) continue;
        double h = naive_sse(r.members, dd.y());
        const auto term = tt.terminals(r.id);
        for (int l : term) h -= naive_sse(tt.regions[l].members, dd.y());
        REQUIRE(subtree_gain(tt, r.id, dd.y()) == doctest::Approx(h).epsilon(1e-9));
        REQUIRE(g_value(tt, r.id, dd.y()) >= 0.0);
      }
    }
  }

  TEST_CASE("pruning limits") {
    std::mt19937_64 rng(6);
    const Dataset d = random_dataset(rng, 30, 2);
    const Tree t = grow(d, d.y(), {3, 1, 0.0});
    const auto order = bottom_up_ordering(t);
    CHECK(terminal_partition(prune(t, d.y(), 0.0, order)) == terminal_partition(t));
    CHECK(prune(t, d.y(), std::numeric_limits<double>::infinity(), order).size() == 1);
    CHECK_THROWS_AS(prune(t, d.y(), -1.0, order), Error);
  }

  TEST_CASE("pruning matches an independent replay") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> lam(0.0, 6.0);
    for (int rep = 0; rep < 60; ++rep) {
      const Dataset d = random_dataset(rng, 30, 2, 1.0 + rep % 3);
      const Tree t = grow(d, d.y(), {4, 1, 0.0});
      const double lambda = lam(rng);
      const auto order = bottom_up_ordering(t);
      const Tree p = prune(t, d.y(), lambda, order);
      check_tree_shape(p);
      REQUIRE(terminal_partition(p) == replay_prune(t, d.y(), lambda, order));
      REQUIRE(terminal_partition(fit(d, d.y(), {4, 1, 0.0}, lambda)) ==
              terminal_partition(p));
    }
  }

  TEST_CASE("larger penalties coarsen the partition") {
    std::mt19937_64 rng(8);
    for (int rep = 0; rep < 40; ++rep) {
      const Dataset d = random_dataset(rng, 30, 2);
      const Tree t = grow(d, d.y(), {4, 1, 0.0});
      const auto order = bottom_up_ordering(t);
      const auto fine = terminal_partition(prune(t, d.y(), 0.5, order));
      const auto coarse = terminal_partition(prune(t, d.y(), 3.0, order));
      for (const auto& cell : fine) {
        bool nested = false;
        for (const auto& big : coarse) {
          nested = nested || std::includes(big.begin(), big.end(), cell.begin(), cell.end());
        }
        REQUIRE(nested);
      }
    }
  }

  TEST_CASE("prediction") {
    std::mt19937_64 rng(9);
    const Dataset d = random_dataset(rng, 20, 2);
    const Tree root_only = grow(d, d.y(), {0, 1, 0.0});
    double mean = 0.0;
    for (double v : d.y()) mean += v / 20.0;
    CHECK(predict(root_only, d.row(3)) == doctest::Approx(mean));

    const Dataset four = make_dataset({{1, 2, 3, 4}}, {0, 0, 10, 10});
    const Tree one = grow(four, four.y(), {1, 1, 0.0});
    CHECK(predict(one, std::vector<double>{1.5}) == 0.0);
    CHECK(predict(one, std::vector<double>{2.0}) == 0.0);
    CHECK(predict(one, std::vector<double>{2.5}) == 10.0);

    for (int rep = 0; rep < 20; ++rep) {
      const Dataset dd = random_dataset(rng, 30, 3);
      const Tree t = fit(dd, dd.y(), {3, 1, 0.0}, 0.5);
      for (const Region& r : t.regions) {
        const auto path = members_from_path(t, dd, r.id);
        REQUIRE(path == r.members);
        if (!r.terminal()) continue;
        double m = 0.0;
        for (int i : path) m += dd.y()[i];
        m /= path.size();
        for (int i : path) REQUIRE(predict(t, dd.row(i)) == doctest::Approx(m));
      }
    }
  }

  TEST_CASE("json round trip") {
    std::mt19937_64 rng(10);
    const Dataset d = random_dataset(rng, 30, 2);
    const Tree t = fit(d, d.y(), {3, 2, 0.0}, 0.7);
    const auto j = tree_to_json(t, d);
    CHECK(j["schema"] == "treeval.tree/1");
    const Tree back = tree_from_json(j, d, d.y());
    REQUIRE(back.size() == t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
      CHECK(back.regions[i].members == t.regions[i].members);
      CHECK(back.regions[i].mean == t.regions[i].mean);
    }
    CHECK(back.lambda == 0.7);
    CHECK(back.stop.min_node_size == 2);
    auto bad = j;
    bad["schema"] = "other";
    CHECK_THROWS_AS(tree_from_json(bad, d, d.y()), Error);
    auto wrong_n = j;
    wrong_n["n"] = 31;
    CHECK_THROWS_AS(tree_from_json(wrong_n, d, d.y()), Error);
  }
}
