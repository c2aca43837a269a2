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

#ifndef TREEVAL_CONTRAST_HPP_
#define TREEVAL_CONTRAST_HPP_

#include <span>
#include <vector>

namespace treeval {

enum class ContrastKind { kSibling, kRegion };

// Sparse contrast vector over n observations. `index` is ascending.
struct Contrast {
  ContrastKind kind = ContrastKind::kRegion;
  std::size_t n = 0;
  std::vector<int> index;
  std::vector<double> value;
  std::vector<int> region_a;
  std::vector<int> region_b;  // empty for region contrasts
  double norm2 = 0.0;

  std::vector<double> dense() const;
  double dot(std::span<const double> y) const;
};

// 1/|A| on A, -1/|B| on B. Throws on empty or overlapping regions.
Contrast nu_sib(std::span<const int> region_a, std::span<const int> region_b, std::size_t n);
// 1/|A| on A.
Contrast nu_reg(std::span<const int> region_a, std::size_t n);

// y minus its projection on nu.
std::vector<double> perp(const Contrast& nu, std::span<const double> y);

// perp(y) + phi * nu / ||nu||^2.
std::vector<double> y_prime(double phi, const Contrast& nu, std::span<const double> y);
std::vector<double> y_prime_from_perp(double phi, const Contrast& nu,
                                      std::span<const double> perp_y);

}  // namespace treeval

#endif  // TREEVAL_CONTRAST_HPP_
