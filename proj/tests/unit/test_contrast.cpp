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

#include <numeric>
#include <random>

#include "doctest.h"
#include "support.hpp"
#include "treeval/contrast.hpp"
#include "treeval/error.hpp"

using namespace treeval;
using treeval::testing::random_vector;

namespace {

std::vector<int> random_subset(std::mt19937_64& rng, int n, int k) {
  std::vector<int> all(n);
  std::iota(all.begin(), all.end(), 0);
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(k);
  std::sort(all.begin(), all.end());
  return all;
}

}  // namespace

TEST_SUITE("contrast") {
  TEST_CASE("sibling entries") {
    const auto nu = nu_sib(std::vector<int>{0, 1}, std::vector<int>{2, 3}, 4);
    CHECK(nu.dense() == std::vector<double>{0.5, 0.5, -0.5, -0.5});
    CHECK(nu.norm2 == doctest::Approx(1.0));
    const auto uneven = nu_sib(std::vector<int>{0}, std::vector<int>{1, 2, 3}, 4);
    const auto dense = uneven.dense();
    CHECK(dense[0] == 1.0);
    for (int i = 1; i < 4; ++i) CHECK(dense[i] == doctest::Approx(-1.0 / 3.0));
    const std::vector<double> y = {1, 3, 5, 7};
    CHECK(nu.dot(y) == doctest::Approx(-4.0));
  }

  TEST_CASE("region entries") {
    const auto nu = nu_reg(std::vector<int>{0, 1, 2, 3}, 4);
    CHECK(nu.dense() == std::vector<double>(4, 0.25));
    CHECK(nu.norm2 == doctest::Approx(0.25));
    const auto one = nu_reg(std::vector<int>{2}, 4);
    CHECK(one.dense() == std::vector<double>{0, 0, 1, 0});
    CHECK(one.norm2 == 1.0);
  }

  TEST_CASE("invalid regions") {
    CHECK_THROWS_AS(nu_sib(std::vector<int>{}, std::vector<int>{1}, 3), Error);
    CHECK_THROWS_AS(nu_sib(std::vector<int>{0, 1}, std::vector<int>{1}, 3), Error);
    CHECK_THROWS_AS(nu_reg(std::vector<int>{5}, 3), Error);
    CHECK_THROWS_AS(nu_reg(std::vector<int>{2, 1}, 3), Error);
  }

  TEST_CASE("region contrast is the region mean") {
    std::mt19937_64 rng(1);
    for (int rep = 0; rep < 100; ++rep) {
      const auto y = random_vector(rng, 40, 3.0);
      const auto a = random_subset(rng, 40, 1 + rep % 39);
      double mean = 0.0;
      for (int i : a) mean += y[i];
      mean /= a.size();
      REQUIRE(nu_reg(a, 40).dot(y) == doctest::Approx(mean).epsilon(1e-12));
    }
  }

  TEST_CASE("perturbation at the observed statistic returns y") {
    std::mt19937_64 rng(2);
    const auto y = random_vector(rng, 12);
    const auto nu = nu_sib(std::vector<int>{0, 3, 5}, std::vector<int>{7, 8}, 12);
    CHECK(y_prime(nu.dot(y), nu, y) == y);
  }

  TEST_CASE("zero perturbation equalizes the sibling means") {
    std::mt19937_64 rng(3);
    const auto y = random_vector(rng, 10);
    const std::vector<int> a = {1, 2, 4}, b = {6, 9};
    const auto yp = y_prime(0.0, nu_sib(a, b, 10), y);
    double ma = 0, mb = 0;
    for (int i : a) ma += yp[i] / a.size();
    for (int i : b) mb += yp[i] / b.size();
    CHECK(ma == doctest::Approx(mb));
  }

  TEST_CASE("perturbation path against a dense projection") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    for (int rep = 0; rep < 200; ++rep) {
      const int n = 15;
      const auto y = random_vector(rng, n, 2.0);
      const auto a = random_subset(rng, n, 1 + rep % 7);
      std::vector<int> rest;
      for (int i = 0; i < n; ++i) {
        if (!std::binary_search(a.begin(), a.end(), i)) rest.push_back(i);
      }
      std::shuffle(rest.begin(), rest.end(), rng);
      rest.resize(1 + rep % 5);
      std::sort(rest.begin(), rest.end());
      const Contrast nu = rep % 2 ? nu_sib(a, rest, n) : nu_reg(a, n);
      const auto v = nu.dense();
      const double phi = u(rng);
      const auto yp = y_prime(phi, nu, y);
      double dot = 0.0, vv = 0.0;
      for (int i = 0; i < n; ++i) dot += v[i] * yp[i], vv += v[i] * v[i];
      REQUIRE(dot == doctest::Approx(phi).epsilon(1e-9));
      // P-perp of (y' - y) must vanish: y' - y is parallel to v.
      std::vector<double> diff(n);
      double dv = 0.0;
      for (int i = 0; i < n; ++i) diff[i] = yp[i] - y[i], dv += diff[i] * v[i];
      double resid = 0.0;
      for (int i = 0; i < n; ++i) resid += std::pow(diff[i] - dv / vv * v[i], 2);
      REQUIRE(std::sqrt(resid) <= 1e-10 * std::max(1.0, std::abs(phi)));
      // Affine in phi.
      const auto y0 = y_prime(0.0, nu, y);
      for (int i = 0; i < n; ++i) {
        REQUIRE(yp[i] - y0[i] == doctest::Approx(phi * v[i] / vv).epsilon(1e-9).scale(50));
      }
      if (nu.kind == ContrastKind::kRegion) {
        for (int i = 0; i < n; ++i) {
          if (!std::binary_search(a.begin(), a.end(), i)) REQUIRE(yp[i] == y[i]);
        }
      }
    }
  }
}
