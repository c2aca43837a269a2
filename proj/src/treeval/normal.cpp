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

#include "treeval/normal.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <limits>

namespace treeval {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kSqrt2 = 1.4142135623730950488;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;
constexpr double kContinuedFractionFrom = 8.0;
constexpr int kContinuedFractionDepth = 80;

// Mills ratio continued fraction: Q(x) = pdf(x) / (x + 1/(x + 2/(x + ...))).
double log_upper_tail_cf(double x) {
  double t = x;
  for (int k = kContinuedFractionDepth; k >= 1; --k) t = x + k / t;
  return -0.5 * x * x - kLogSqrt2Pi - std::log(t);
}

}  // namespace

double log1mexp(double a) {
  if (a >= 0.0) return kNegInf;
  return a > -0.6931471805599453 ? std::log(-std::expm1(a)) : std::log1p(-std::exp(a));
}

double log_add_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

double log_upper_tail(double x) {
  if (std::isnan(x)) return x;
  if (x == -std::numeric_limits<double>::infinity()) return 0.0;
  if (x == std::numeric_limits<double>::infinity()) return kNegInf;
  if (x >= kContinuedFractionFrom) return log_upper_tail_cf(x);
  if (x < -1.0) return std::log1p(-0.5 * std::erfc(-x / kSqrt2));
  return std::log(0.5 * std::erfc(x / kSqrt2));
}

double log_lower_tail(double x) { return log_upper_tail(-x); }

double log_std_mass(double lo, double hi) {
  if (!(lo < hi)) return kNegInf;
  if (lo >= 0.0) {
    const double a = log_upper_tail(lo);
    const double b = log_upper_tail(hi);
    return a + log1mexp(b - a);
  }
  if (hi <= 0.0) return log_std_mass(-hi, -lo);
  const double half_hi = std::isinf(hi) ? 1.0 : std::erf(hi / kSqrt2);
  const double half_lo = std::isinf(lo) ? 1.0 : std::erf(-lo / kSqrt2);
  return std::log(0.5 * (half_hi + half_lo));
}

double two_sided_quantile(double alpha) {
  return kSqrt2 * boost::math::erfc_inv(alpha);
}

}  // namespace treeval
