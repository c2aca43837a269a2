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

#ifndef TREEVAL_INTERVALS_HPP_
#define TREEVAL_INTERVALS_HPP_

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace treeval {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// One real interval. Infinite endpoints are always open.
struct Interval {
  double lo = -kInf;
  double hi = kInf;
  bool lo_closed = false;
  bool hi_closed = false;

  static Interval closed(double lo, double hi) {
    return {lo, hi, std::isfinite(lo), std::isfinite(hi)};
  }
  static Interval open(double lo, double hi) { return {lo, hi, false, false}; }
  static Interval real_line() { return {}; }

  bool empty() const;
  bool contains(double x) const;
  double length() const { return hi - lo; }

  friend bool operator==(const Interval&, const Interval&) = default;
};

// Finite union of disjoint intervals, kept sorted and merged.
class IntervalSet {
 public:
  IntervalSet() = default;
  explicit IntervalSet(std::vector<Interval> parts);
  explicit IntervalSet(Interval part) : IntervalSet(std::vector<Interval>{part}) {}

  static IntervalSet real_line() { return IntervalSet(Interval::real_line()); }
  static IntervalSet empty_set() { return {}; }

  const std::vector<Interval>& intervals() const { return parts_; }
  std::size_t size() const { return parts_.size(); }
  bool empty() const { return parts_.empty(); }
  bool is_real_line() const;

  bool contains(double x) const;
  // Distance from x to the closure of the set; 0 inside, +inf when empty.
  double distance(double x) const;
  // Endpoints of every component, finite ones only, ascending.
  std::vector<double> finite_endpoints() const;
  double measure() const;

  std::string to_string() const;

  friend bool operator==(const IntervalSet&, const IntervalSet&) = default;

 private:
  std::vector<Interval> parts_;
};

bool contains(const IntervalSet& set, double x);

// Endpoint sweep over every component of every input: O(E log E).
IntervalSet intersect_all(std::span<const IntervalSet> sets);
IntervalSet union_all(std::span<const IntervalSet> sets);
IntervalSet intersect(const IntervalSet& a, const IntervalSet& b);
IntervalSet set_union(const IntervalSet& a, const IntervalSet& b);

enum class Sense { kLessEqual, kGreaterEqual };

// a*phi^2 + b*phi + c  (<= or >=)  0.
//
// The *_ref magnitudes say how large each coefficient is relative to the
// quantities it was computed from; a coefficient whose magnitude is within
// tol * ref of zero is treated as exactly zero. A ref of 0 means the
// coefficient is taken at face value.
struct QuadraticConstraint {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  Sense sense = Sense::kLessEqual;
  double a_ref = 0.0;
  double b_ref = 0.0;
  double c_ref = 0.0;
};

inline constexpr double kQuadraticTol = 1e-9;

IntervalSet solve_quadratic(const QuadraticConstraint& q, double tol = kQuadraticTol);

// [lo, hi, lo_closed, hi_closed] per component, "-inf"/"inf" for infinities.
nlohmann::json to_json(const IntervalSet& set);
IntervalSet interval_set_from_json(const nlohmann::json& j);
nlohmann::json double_to_json(double v);
double double_from_json(const nlohmann::json& j);

}  // namespace treeval

#endif  // TREEVAL_INTERVALS_HPP_
