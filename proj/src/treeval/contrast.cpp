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

#include "treeval/contrast.hpp"

#include <algorithm>
#include <string>

#include "treeval/error.hpp"

namespace treeval {
namespace {

void check_region(std::span<const int> r, std::size_t n, const char* name) {
  if (r.empty()) throw Error(ErrorCode::kInvalidArgument, std::string(name) + " is empty");
  for (std::size_t k = 0; k < r.size(); ++k) {
    if (r[k] < 0 || static_cast<std::size_t>(r[k]) >= n) {
      throw Error(ErrorCode::kOutOfRange, std::string(name) + " has an index outside 0..n-1");
    }
    if (k > 0 && r[k] <= r[k - 1]) {
      throw Error(ErrorCode::kInvalidArgument,
                  std::string(name) + " must hold strictly ascending indices");
    }
  }
}

}  // namespace

std::vector<double> Contrast::dense() const {
  std::vector<double> v(n, 0.0);
  for (std::size_t k = 0; k < index.size(); ++k) v[index[k]] = value[k];
  return v;
}

double Contrast::dot(std::span<const double> y) const {
  double s = 0.0;
  for (std::size_t k = 0; k < index.size(); ++k) s += value[k] * y[index[k]];
  return s;
}

Contrast nu_sib(std::span<const int> region_a, std::span<const int> region_b, std::size_t n) {
  check_region(region_a, n, "region A");
  check_region(region_b, n, "region B");
  std::vector<int> overlap;
  std::set_intersection(region_a.begin(), region_a.end(), region_b.begin(), region_b.end(),
                        std::back_inserter(overlap));
  if (!overlap.empty()) throw Error(ErrorCode::kInvalidArgument, "regions A and B overlap");

  Contrast c;
  c.kind = ContrastKind::kSibling;
  c.n = n;
  c.region_a.assign(region_a.begin(), region_a.end());
  c.region_b.assign(region_b.begin(), region_b.end());
  const double wa = 1.0 / static_cast<double>(region_a.size());
  const double wb = -1.0 / static_cast<double>(region_b.size());
  std::size_t ia = 0;
  std::size_t ib = 0;
  while (ia < region_a.size() || ib < region_b.size()) {
    if (ib == region_b.size() || (ia < region_a.size() && region_a[ia] < region_b[ib])) {
      c.index.push_back(region_a[ia++]);
      c.value.push_back(wa);
    } else {
      c.index.push_back(region_b[ib++]);
      c.value.push_back(wb);
    }
  }
  c.norm2 = wa + (-wb);
  return c;
}

Contrast nu_reg(std::span<const int> region_a, std::size_t n) {
  check_region(region_a, n, "region A");
  Contrast c;
  c.kind = ContrastKind::kRegion;
  c.n = n;
  c.region_a.assign(region_a.begin(), region_a.end());
  c.index = c.region_a;
  const double w = 1.0 / static_cast<double>(region_a.size());
  c.value.assign(region_a.size(), w);
  c.norm2 = w;
  return c;
}

std::vector<double> perp(const Contrast& nu, std::span<const double> y) {
  if (!(nu.norm2 > 0.0)) throw Error(ErrorCode::kDegenerate, "zero contrast");
  if (y.size() != nu.n) throw Error(ErrorCode::kInvalidArgument, "response length mismatch");
  std::vector<double> out(y.begin(), y.end());
  const double k = nu.dot(y) / nu.norm2;
  for (std::size_t i = 0; i < nu.index.size(); ++i) out[nu.index[i]] -= k * nu.value[i];
  return out;
}

std::vector<double> y_prime_from_perp(double phi, const Contrast& nu,
                                      std::span<const double> perp_y) {
  if (!(nu.norm2 > 0.0)) throw Error(ErrorCode::kDegenerate, "zero contrast");
  std::vector<double> out(perp_y.begin(), perp_y.end());
  const double k = phi / nu.norm2;
  for (std::size_t i = 0; i < nu.index.size(); ++i) out[nu.index[i]] += k * nu.value[i];
  return out;
}

std::vector<double> y_prime(double phi, const Contrast& nu, std::span<const double> y) {
  if (phi == nu.dot(y)) return {y.begin(), y.end()};
  return y_prime_from_perp(phi, nu, perp(nu, y));
}

}  // namespace treeval
