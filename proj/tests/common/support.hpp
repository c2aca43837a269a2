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

// Shared fixtures for the unit and acceptance suites.

#ifndef TREEVAL_TESTS_SUPPORT_HPP_
#define TREEVAL_TESTS_SUPPORT_HPP_

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "treeval/cart.hpp"
#include "treeval/dataset.hpp"

namespace treeval::testing {

inline std::vector<std::string> feature_names(std::size_t p) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < p; ++j) names.push_back("x" + std::to_string(j + 1));
  return names;
}

inline Dataset make_dataset(std::vector<std::vector<double>> columns, std::vector<double> y) {
  return Dataset(feature_names(columns.size()), std::move(columns), std::move(y));
}

// Gaussian covariates and a response with a step in x1 plus noise.
inline Dataset random_dataset(std::mt19937_64& rng, std::size_t n, std::size_t p,
                              double step = 2.0) {
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<std::vector<double>> cols(p, std::vector<double>(n));
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) cols[j][i] = z(rng);
    y[i] = step * (cols[0][i] <= 0.0 ? 1.0 : 0.0) + z(rng);
  }
  return make_dataset(std::move(cols), std::move(y));
}

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n,
                                         double sd = 1.0) {
  std::normal_distribution<double> z(0.0, sd);
  std::vector<double> v(n);
  for (double& x : v) x = z(rng);
  return v;
}

inline std::filesystem::path temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "treeval_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

#ifdef TREEVAL_TEST_DATA_DIR
inline std::string data_file(const std::string& name) {
  return std::string(TREEVAL_TEST_DATA_DIR) + "/" + name;
}
#endif

inline bool close_rel(double a, double b, double rel, double abs_floor = 1e-12) {
  return std::abs(a - b) <= rel * std::max({std::abs(a), std::abs(b), 1.0}) + abs_floor;
}

}  // namespace treeval::testing

#endif  // TREEVAL_TESTS_SUPPORT_HPP_
