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

#ifndef TREEVAL_NORMAL_HPP_
#define TREEVAL_NORMAL_HPP_

namespace treeval {

// log P(Z > x) for standard normal Z, accurate far into the upper tail.
double log_upper_tail(double x);
// log P(Z <= x).
double log_lower_tail(double x);
// log P(lo < Z < hi); -inf when lo >= hi.
double log_std_mass(double lo, double hi);

// log(1 - exp(a)) for a <= 0.
double log1mexp(double a);
double log_add_exp(double a, double b);

// Two-sided standard normal quantile z with P(|Z| > z) = alpha.
double two_sided_quantile(double alpha);

}  // namespace treeval

#endif  // TREEVAL_NORMAL_HPP_
