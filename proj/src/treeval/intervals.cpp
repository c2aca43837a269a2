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

#include "treeval/intervals.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "treeval/error.hpp"

namespace treeval {

bool Interval::empty() const {
  if (lo > hi) return true;
  if (lo == hi) return !(lo_closed && hi_closed);
  return false;
}

bool Interval::contains(double x) const {
  if (x < lo || x > hi) return false;
  if (x == lo && !lo_closed) return false;
  if (x == hi && !hi_closed) return false;
  return true;
}

IntervalSet::IntervalSet(std::vector<Interval> parts) {
  for (auto& iv : parts) {
    if (!std::isfinite(iv.lo)) iv.lo_closed = false;
    if (!std::isfinite(iv.hi)) iv.hi_closed = false;
  }
  std::erase_if(parts, [](const Interval& iv) { return iv.empty(); });
  std::sort(parts.begin(), parts.end(), [](const Interval& x, const Interval& y) {
    if (x.lo != y.lo) return x.lo < y.lo;
    return x.lo_closed && !y.lo_closed;
  });
  for (const auto& iv : parts) {
    if (!parts_.empty()) {
      Interval& cur = parts_.back();
      const bool touches =
          iv.lo < cur.hi || (iv.lo == cur.hi && (cur.hi_closed || iv.lo_closed));
      if (touches) {
        if (iv.hi > cur.hi) {
          cur.hi = iv.hi;
          cur.hi_closed = iv.hi_closed;
        } else if (iv.hi == cur.hi) {
          cur.hi_closed = cur.hi_closed || iv.hi_closed;
        }
        continue;
      }
    }
    parts_.push_back(iv);
  }
}

bool IntervalSet::is_real_line() const {
  return parts_.size() == 1 && parts_[0].lo == -kInf && parts_[0].hi == kInf;
}

bool IntervalSet::contains(double x) const {
  auto it = std::upper_bound(parts_.begin(), parts_.end(), x,
                             [](double v, const Interval& iv) { return v < iv.lo; });
  if (it == parts_.begin()) return false;
  return std::prev(it)->contains(x);
}

double IntervalSet::distance(double x) const {
  double best = kInf;
  for (const auto& iv : parts_) {
    if (x < iv.lo) {
      best = std::min(best, iv.lo - x);
    } else if (x > iv.hi) {
      best = std::min(best, x - iv.hi);
    } else {
      return 0.0;
    }
  }
  return best;
}

std::vector<double> IntervalSet::finite_endpoints() const {
  std::vector<double> out;
  for (const auto& iv : parts_) {
    if (std::isfinite(iv.lo)) out.push_back(iv.lo);
    if (std::isfinite(iv.hi)) out.push_back(iv.hi);
  }
  return out;
}

double IntervalSet::measure() const {
  double total = 0.0;
  for (const auto& iv : parts_) total += iv.hi - iv.lo;
  return total;
}

std::string IntervalSet::to_string() const {
  if (parts_.empty()) return "{}";
  std::ostringstream os;
  os.precision(10);
  for (std::size_t k = 0; k < parts_.size(); ++k) {
    const auto& iv = parts_[k];
    if (k) os << " U ";
    os << (iv.lo_closed ? '[' : '(') << iv.lo << ", " << iv.hi
       << (iv.hi_closed ? ']' : ')');
  }
  return os.str();
}

bool contains(const IntervalSet& set, double x) { return set.contains(x); }

namespace {

// Boundary (v, 0) sits just before the point v, (v, 1) just after it.
struct Boundary {
  double v;
  int side;
  int delta;
};

IntervalSet sweep(std::span<const IntervalSet> sets, int threshold) {
  std::vector<Boundary> events;
  std::size_t total = 0;
  for (const auto& s : sets) total += s.size();
  events.reserve(2 * total);
  for (const auto& s : sets) {
    for (const auto& iv : s.intervals()) {
      events.push_back({iv.lo, iv.lo_closed ? 0 : 1, +1});
      events.push_back({iv.hi, iv.hi_closed ? 1 : 0, -1});
    }
  }
  std::sort(events.begin(), events.end(), [](const Boundary& x, const Boundary& y) {
    if (x.v != y.v) return x.v < y.v;
    return x.side < y.side;
  });

  std::vector<Interval> out;
  int count = 0;
  bool inside = false;
  Interval cur;
  std::size_t k = 0;
  while (k < events.size()) {
    const double v = events[k].v;
    const int side = events[k].side;
    while (k < events.size() && events[k].v == v && events[k].side == side) {
      count += events[k].delta;
      ++k;
    }
    const bool now_inside = count >= threshold;
    if (now_inside && !inside) {
      cur.lo = v;
      cur.lo_closed = side == 0;
    } else if (!now_inside && inside) {
      cur.hi = v;
      cur.hi_closed = side == 1;
      out.push_back(cur);
    }
    inside = now_inside;
  }
  return IntervalSet(std::move(out));
}

}  // namespace

IntervalSet intersect_all(std::span<const IntervalSet> sets) {
  if (sets.empty()) return IntervalSet::real_line();
  // Single-interval inputs collapse to one box in a linear pass; inputs
  // covering the box are dropped before the sweep.
  Interval box = Interval::real_line();
  for (const auto& s : sets) {
    if (s.empty()) return {};
    if (s.size() != 1) continue;
    const Interval& iv = s.intervals()[0];
    if (iv.lo > box.lo) {
      box.lo = iv.lo;
      box.lo_closed = iv.lo_closed;
    } else if (iv.lo == box.lo) {
      box.lo_closed = box.lo_closed && iv.lo_closed;
    }
    if (iv.hi < box.hi) {
      box.hi = iv.hi;
      box.hi_closed = iv.hi_closed;
    } else if (iv.hi == box.hi) {
      box.hi_closed = box.hi_closed && iv.hi_closed;
    }
  }
  if (box.empty()) return {};
  auto covers = [&box](const IntervalSet& s) {
    for (const Interval& c : s.intervals()) {
      const bool from = c.lo < box.lo || (c.lo == box.lo && (c.lo_closed || !box.lo_closed));
      const bool to = c.hi > box.hi || (c.hi == box.hi && (c.hi_closed || !box.hi_closed));
      if (from && to) return true;
    }
    return false;
  };
  std::vector<IntervalSet> rest{IntervalSet(box)};
  for (const auto& s : sets) {
    if (s.size() != 1 && !covers(s)) rest.push_back(s);
  }
  if (rest.size() == 1) return rest.front();
  return sweep(rest, static_cast<int>(rest.size()));
}

IntervalSet union_all(std::span<const IntervalSet> sets) {
  if (sets.empty()) return {};
  return sweep(sets, 1);
}

IntervalSet intersect(const IntervalSet& a, const IntervalSet& b) {
  const IntervalSet both[] = {a, b};
  return intersect_all(both);
}

IntervalSet set_union(const IntervalSet& a, const IntervalSet& b) {
  const IntervalSet both[] = {a, b};
  return union_all(both);
}

IntervalSet solve_quadratic(const QuadraticConstraint& q, double tol) {
  if (!std::isfinite(q.a) || !std::isfinite(q.b) || !std::isfinite(q.c)) {
    throw Error(ErrorCode::kInvalidArgument, "quadratic constraint has non-finite coefficients");
  }
  const double sign = q.sense == Sense::kLessEqual ? 1.0 : -1.0;
  auto clean = [tol](double v, double ref) {
    return (ref > 0.0 && std::abs(v) <= tol * ref) ? 0.0 : v;
  };
  const double a = sign * clean(q.a, q.a_ref);
  const double b = sign * clean(q.b, q.b_ref);
  const double c = sign * clean(q.c, q.c_ref);

  // Solve a*phi^2 + b*phi + c <= 0.
  if (a == 0.0) {
    if (b == 0.0) return c <= 0.0 ? IntervalSet::real_line() : IntervalSet{};
    const double root = -c / b;
    if (b > 0.0) return IntervalSet(Interval{-kInf, root, false, true});
    return IntervalSet(Interval{root, kInf, true, false});
  }

  double disc = b * b - 4.0 * a * c;
  const double disc_scale = std::max(b * b, std::abs(4.0 * a * c));
  if (std::abs(disc) <= tol * disc_scale) disc = 0.0;

  if (disc < 0.0) return a > 0.0 ? IntervalSet{} : IntervalSet::real_line();
  if (disc == 0.0) {
    if (a < 0.0) return IntervalSet::real_line();
    const double r = -b / (2.0 * a);
    return IntervalSet(Interval{r, r, true, true});
  }
  const double sq = std::sqrt(disc);
  const double qq = -0.5 * (b + std::copysign(sq, b));
  double r1 = qq / a;
  double r2 = c / qq;
  if (r1 > r2) std::swap(r1, r2);
  if (a > 0.0) return IntervalSet(Interval::closed(r1, r2));
  return IntervalSet({Interval{-kInf, r1, false, std::isfinite(r1)},
                      Interval{r2, kInf, std::isfinite(r2), false}});
}

nlohmann::json double_to_json(double v) {
  if (v == kInf) return "inf";
  if (v == -kInf) return "-inf";
  return v;
}

double double_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    throw Error(ErrorCode::kParse, "unexpected numeric sentinel '" + s + "'");
  }
  return j.get<double>();
}

nlohmann::json to_json(const IntervalSet& set) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& iv : set.intervals()) {
    arr.push_back({double_to_json(iv.lo), double_to_json(iv.hi), iv.lo_closed, iv.hi_closed});
  }
  return arr;
}

IntervalSet interval_set_from_json(const nlohmann::json& j) {
  std::vector<Interval> parts;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 4) {
      throw Error(ErrorCode::kParse, "interval must be [lo, hi, lo_closed, hi_closed]");
    }
    parts.push_back({double_from_json(e[0]), double_from_json(e[1]), e[2].get<bool>(),
                     e[3].get<bool>()});
  }
  return IntervalSet(std::move(parts));
}

}  // namespace treeval
