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

// Independent references for truncated-normal quantities, shared by the
// unit and acceptance suites.

#ifndef TREEVAL_TESTS_TN_ORACLE_HPP_
#define TREEVAL_TESTS_TN_ORACLE_HPP_

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "treeval/intervals.hpp"

namespace treeval::testing {

// Standardized point of `support` closest to zero; the density is scaled by
// its value there so far-tail supports do not underflow.
inline double anchor(const IntervalSet& support, double mean, double sd) {
  double best = kInf;
  for (const Interval& iv : support.intervals()) {
    const double z = std::clamp(0.0, (iv.lo - mean) / sd, (iv.hi - mean) / sd);
    if (std::abs(z) < std::abs(best)) best = z;
  }
  return best;
}

// Integral of exp(-(z^2 - z0^2) / 2) over [a, b] in standardized units.
// Beyond |z0| + 40 the scaled density is below exp(-800), so the range is
// clipped there.
inline double scaled_mass(double a, double b, double z0) {
  const double reach = std::abs(z0) + 40.0;
  a = std::max(a, -reach);
  b = std::min(b, reach);
  if (!(a < b)) return 0.0;
  auto f = [z0](double u) { return std::exp(-0.5 * u * (u + 2.0 * z0)); };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a - z0, b - z0, 15,
                                                                       1e-13);
}

// P(X <= x) for X ~ N(mean, sd^2) restricted to `support`, by adaptive
// Gauss-Kronrod quadrature of the density.
inline double quadrature_tn_cdf(double x, double mean, double sd, const IntervalSet& support) {
  const double z0 = anchor(support, mean, sd);
  const double zx = (x - mean) / sd;
  double below = 0.0;
  double total = 0.0;
  for (const Interval& iv : support.intervals()) {
    const double a = (iv.lo - mean) / sd;
    const double b = (iv.hi - mean) / sd;
    total += scaled_mass(a, b, z0);
    below += scaled_mass(a, std::min(b, zx), z0);
  }
  return below / total;
}

// One to three disjoint components within a few sd of the mean, or a
// support placed 40 sd into a tail.
inline IntervalSet random_support(std::mt19937_64& rng, double mean, double sd, bool far_tail) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (far_tail) {
    const double side = u(rng) < 0.5 ? -1.0 : 1.0;
    const double start = 40.0 + 2.0 * u(rng);
    if (u(rng) < 0.5) {
      const double width = 0.5 + 3.0 * u(rng);
      const double a = mean + side * start * sd;
      const double b = mean + side * (start + width) * sd;
      return IntervalSet(Interval::closed(std::min(a, b), std::max(a, b)));
    }
    // Two unbounded rays, both far from the mean.
    const double gap = 1.0 + u(rng);
    return IntervalSet({Interval{-kInf, mean - start * sd, false, true},
                        Interval{mean + (start + gap) * sd, kInf, true, false}});
  }
  const int k = 1 + static_cast<int>(u(rng) * 3.0);
  std::vector<double> cuts;
  for (int i = 0; i < 2 * k; ++i) cuts.push_back(mean + sd * (8.0 * u(rng) - 4.0));
  std::sort(cuts.begin(), cuts.end());
  std::vector<Interval> parts;
  for (int i = 0; i < k; ++i) parts.push_back(Interval::closed(cuts[2 * i], cuts[2 * i + 1]));
  if (u(rng) < 0.3) parts.front().lo = -kInf, parts.front().lo_closed = false;
  if (u(rng) < 0.3) parts.back().hi = kInf, parts.back().hi_closed = false;
  return IntervalSet(parts);
}

// Random point inside `support` (uniform over a randomly chosen component,
// clipped to a finite window).
inline double point_in(std::mt19937_64& rng, const IntervalSet& support, double mean, double sd) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto& parts = support.intervals();
  const Interval& iv = parts[static_cast<std::size_t>(u(rng) * parts.size()) % parts.size()];
  const double lo = std::isfinite(iv.lo) ? iv.lo : std::min(iv.hi, mean) - 3.0 * sd;
  const double hi = std::isfinite(iv.hi) ? iv.hi : std::max(iv.lo, mean) + 3.0 * sd;
  return lo + (hi - lo) * u(rng);
}

}  // namespace treeval::testing

#endif  // TREEVAL_TESTS_TN_ORACLE_HPP_
