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

#ifndef TREEVAL_DATASET_HPP_
#define TREEVAL_DATASET_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace treeval {

// Fixed design matrix plus response. Columns are stored contiguously and
// every feature carries an ascending sort permutation, built once.
class Dataset {
 public:
  Dataset(std::vector<std::string> feature_names,
          std::vector<std::vector<double>> columns, std::vector<double> y,
          std::string response_name = "y");

  std::size_t n() const { return y_.size(); }
  std::size_t p() const { return columns_.size(); }

  double x(std::size_t i, std::size_t j) const { return columns_[j][i]; }
  std::span<const double> column(std::size_t j) const { return columns_[j]; }
  std::span<const double> y() const { return y_; }
  std::vector<double> row(std::size_t i) const;

  // Observation indices ordering column j ascending (stable in index).
  std::span<const int> sort_index(std::size_t j) const { return sort_idx_[j]; }

  // 0-based position of the last element of the tie group containing sorted
  // position `pos` of feature j.
  int tie_end(std::size_t j, std::size_t pos) const { return tie_end_[j][pos]; }

  // x_{j,(s)} for 1 <= s <= n-1. Throws kOutOfRange otherwise.
  double order_statistic(std::size_t j, std::size_t s) const;

  // True when x_{j,(s)} < x_{j,(s+1)}, i.e. the rank induces a split that
  // is not collapsed by duplicated values.
  bool admissible_rank(std::size_t j, std::size_t s) const;

  const std::vector<std::string>& feature_names() const { return names_; }
  const std::string& response_name() const { return response_name_; }

  // Same covariates, different response (used for simulated and perturbed
  // responses). Sort indices are shared by value.
  Dataset with_response(std::vector<double> y) const;

  // Subset of observations, covariates and response both restricted.
  Dataset subset(std::span<const int> rows) const;

  // FNV-1a over the header and the bit patterns of every value, hex encoded.
  std::string checksum() const;

 private:
  void build_sort_indices();

  std::vector<std::string> names_;
  std::vector<std::vector<double>> columns_;
  std::vector<double> y_;
  std::string response_name_;
  std::vector<std::vector<int>> sort_idx_;
  std::vector<std::vector<int>> tie_end_;
};

double order_statistic(const Dataset& d, std::size_t j, std::size_t s);

// Reads a headered, comma separated file. Every cell must be numeric; the
// response column may sit anywhere and covariate order is preserved.
Dataset load_csv(const std::string& path, const std::string& response_col);

// Writes covariates first, response last, with shortest round-trip
// formatting. When `sidecar` is set, also writes `<path>.json` holding the
// response name and checksum.
void save_csv(const Dataset& d, const std::string& path, bool sidecar = false);

}  // namespace treeval

#endif  // TREEVAL_DATASET_HPP_
