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
#include <numeric>
#include <random>

#include "doctest.h"
#include "support.hpp"
#include "treeval/cart.hpp"
#include "treeval/oracle.hpp"
#include "treeval/truncation.hpp"

using namespace treeval;
using treeval::testing::random_dataset;
using treeval::testing::random_vector;

TEST_SUITE("oracle") {
  TEST_CASE("grid points") {
    const oracle::GridSpec g{-1.0, 1.0, 5};
    const auto pts = g.points();
    REQUIRE(pts.size() == 7);
    CHECK(pts.front() == -oracle::kFarProbe);
    CHECK(pts.back() == oracle::kFarProbe);
    CHECK(pts[1] == -1.0);
    CHECK(pts[3] == 0.0);
    CHECK(pts[5] == 1.0);
    CHECK(std::is_sorted(pts.begin(), pts.end()));
    const auto inner = g.points(false);
    CHECK(inner.size() == 5);
    CHECK(inner.front() == -1.0);
  }

  // A sibling contrast sums to zero, so a constant response is its own
  // projection and every coefficient vanishes.
  TEST_CASE("constant response gives a zero quadratic for sibling contrasts") {
    std::mt19937_64 rng(1);
    const Dataset base = random_dataset(rng, 12, 2);
    const Dataset d = base.with_response(std::vector<double>(12, 3.5));
    std::vector<int> all(12);
    std::iota(all.begin(), all.end(), 0);
    const Contrast sib = nu_sib(std::vector<int>{1, 4, 7}, std::vector<int>{2, 9}, 12);
    const Contrast reg = nu_reg(std::vector<int>{1, 4, 7}, 12);
    for (int s = 1; s < 12; ++s) {
      const auto q = oracle::dense_gain_quadratic(all, d, 0, s, sib, d.y());
      CHECK(q.c == doctest::Approx(0.0).scale(1.0));
      CHECK(q.b == doctest::Approx(0.0).scale(1.0));
      const auto r = oracle::dense_gain_quadratic(all, d, 0, s, reg, d.y());
      CHECK(r.at(reg.dot(d.y())) == doctest::Approx(0.0).scale(1.0));
    }
  }

  TEST_CASE("gain matrix is positive semidefinite") {
    std::mt19937_64 rng(2);
    const Dataset d = random_dataset(rng, 15, 2);
    std::vector<int> region;
    for (int i = 0; i < 15; i += 1 + (i % 2)) region.push_back(i);
    std::uniform_int_distribution<int> rank(1, 14);
    std::uniform_int_distribution<int> feat(0, 1);
    for (int rep = 0; rep < 1000; ++rep) {
      const auto v = random_vector(rng, 15, 1.0 + rep % 7);
      int j = 0, s = 0, left = 0;
      while (left == 0 || left == static_cast<int>(region.size())) {
        j = feat(rng);
        s = rank(rng);
        left = 0;
        for (int i : region) left += d.x(i, j) <= d.order_statistic(j, s);
      }
      const double f = oracle::dense_quadratic_form(region, d, j, s, v);
      REQUIRE(f >= -1e-12);
    }
  }

  TEST_CASE("events hold at the observed statistic") {
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 10; ++rep) {
      const Dataset d = random_dataset(rng, 15, 2, 2.0);
      const Tree t = fit(d, d.y(), {3, 1, 0.0}, 0.3 * rep);
      for (const Region& r : t.regions) {
        if (r.parent < 0) continue;
        const Contrast nu = nu_reg(r.members, d.n());
        const double stat = nu.dot(d.y());
        oracle::Event e{oracle::EventKind::kBranch, {}, {}, branch_of(t, d, r.id)};
        REQUIRE(oracle::brute_force_membership(d, d.y(), t.stop, t.lambda, nu, e,
                                               std::vector<double>{stat})[0]);
        oracle::Event s{oracle::EventKind::kSiblings, r.members,
                        t.region(t.sibling(r.id)).members, {}};
        REQUIRE(oracle::event_holds(t, s));
      }
    }
  }

  TEST_CASE("membership comparison excludes endpoint neighbours") {
    const IntervalSet s(Interval::closed(0.0, 1.0));
    const std::vector<double> phis = {-1.0, 0.0, 0.5, 1.0 + 1e-9, 2.0};
    const std::vector<char> brute = {0, 0, 1, 0, 1};
    const auto a = oracle::compare_membership(s, phis, brute, 1e-6);
    CHECK(a.probes == 5);
    CHECK(a.excluded == 2);
    CHECK(a.mismatches == 1);
    CHECK(a.first_mismatch == 2.0);
  }

  TEST_CASE("small study agrees") {
    oracle::StudyConfig cfg;
    cfg.instances = 4;
    cfg.grid_points = 301;
    const auto rep = oracle::run_study(cfg);
    CHECK(rep.instances == 4);
    CHECK(rep.mismatches == 0);
    CHECK(rep.fast_path_differences == 0);
    CHECK(rep.sibling_sets > 0);
    CHECK(rep.region_sets > 0);
    CHECK(rep.to_json()["failures"].empty());
  }
}
