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

#include "treeval/dataset.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "treeval/error.hpp"

namespace treeval {
namespace {

// Splits one CSV record. Quoted fields may contain commas and doubled quotes.
std::vector<std::string> split_record(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char ch = line[k];
    if (quoted) {
      if (ch == '"') {
        if (k + 1 < line.size() && line[k + 1] == '"') {
          cur.push_back('"');
          ++k;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

}  // namespace

Dataset::Dataset(std::vector<std::string> feature_names,
                 std::vector<std::vector<double>> columns,
                 std::vector<double> y, std::string response_name)
    : names_(std::move(feature_names)),
      columns_(std::move(columns)),
      y_(std::move(y)),
      response_name_(std::move(response_name)) {
  if (columns_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "dataset needs at least one covariate");
  }
  if (y_.size() < 2) {
    throw Error(ErrorCode::kTooFewRows,
                "dataset needs at least 2 observations, got " +
                    std::to_string(y_.size()));
  }
  if (names_.size() != columns_.size()) {
    names_.resize(columns_.size());
    for (std::size_t j = 0; j < names_.size(); ++j) {
      if (names_[j].empty()) names_[j] = "x" + std::to_string(j + 1);
    }
  }
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    if (columns_[j].size() != y_.size()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "column " + std::to_string(j) + " has " +
                      std::to_string(columns_[j].size()) + " rows, expected " +
                      std::to_string(y_.size()));
    }
    for (double v : columns_[j]) {
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::kInvalidArgument,
                    "non-finite covariate value in column " + std::to_string(j));
      }
    }
  }
  for (double v : y_) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidArgument, "non-finite response value");
    }
  }
  build_sort_indices();
}

void Dataset::build_sort_indices() {
  const std::size_t n = y_.size();
  sort_idx_.assign(columns_.size(), std::vector<int>(n));
  tie_end_.assign(columns_.size(), std::vector<int>(n));
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    auto& idx = sort_idx_[j];
    std::iota(idx.begin(), idx.end(), 0);
    const auto& col = columns_[j];
    std::stable_sort(idx.begin(), idx.end(),
                     [&col](int a, int b) { return col[a] < col[b]; });
    auto& te = tie_end_[j];
    int end = static_cast<int>(n) - 1;
    for (int pos = static_cast<int>(n) - 1; pos >= 0; --pos) {
      if (pos + 1 < static_cast<int>(n) && col[idx[pos]] < col[idx[pos + 1]]) {
        end = pos;
      }
      te[pos] = end;
    }
  }
}

std::vector<double> Dataset::row(std::size_t i) const {
  std::vector<double> r(p());
  for (std::size_t j = 0; j < p(); ++j) r[j] = columns_[j][i];
  return r;
}

double Dataset::order_statistic(std::size_t j, std::size_t s) const {
  if (j >= p()) {
    throw Error(ErrorCode::kOutOfRange,
                "feature index " + std::to_string(j) + " out of range [0, " +
                    std::to_string(p()) + ")");
  }
  if (s < 1 || s > n() - 1) {
    throw Error(ErrorCode::kOutOfRange,
                "rank " + std::to_string(s) + " out of range [1, " +
                    std::to_string(n() - 1) + "]");
  }
  return columns_[j][sort_idx_[j][s - 1]];
}

bool Dataset::admissible_rank(std::size_t j, std::size_t s) const {
  if (j >= p() || s < 1 || s > n() - 1) return false;
  return tie_end_[j][s - 1] == static_cast<int>(s - 1);
}

Dataset Dataset::with_response(std::vector<double> y) const {
  if (y.size() != n()) {
    throw Error(ErrorCode::kInvalidArgument, "response length does not match dataset");
  }
  Dataset out = *this;
  out.y_ = std::move(y);
  return out;
}

Dataset Dataset::subset(std::span<const int> rows) const {
  std::vector<std::vector<double>> cols(p());
  std::vector<double> y;
  y.reserve(rows.size());
  for (std::size_t j = 0; j < p(); ++j) {
    cols[j].reserve(rows.size());
    for (int i : rows) cols[j].push_back(columns_[j].at(i));
  }
  for (int i : rows) y.push_back(y_.at(i));
  return Dataset(names_, std::move(cols), std::move(y), response_name_);
}

std::string Dataset::checksum() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix_byte = [&h](unsigned char b) {
    h ^= b;
    h *= 1099511628211ULL;
  };
  auto mix_u64 = [&](std::uint64_t v) {
    for (int k = 0; k < 8; ++k) mix_byte(static_cast<unsigned char>(v >> (8 * k)));
  };
  for (const auto& name : names_) {
    for (unsigned char c : name) mix_byte(c);
    mix_byte(0);
  }
  for (unsigned char c : response_name_) mix_byte(c);
  mix_byte(0);
  for (const auto& col : columns_) {
    for (double v : col) mix_u64(std::bit_cast<std::uint64_t>(v));
  }
  for (double v : y_) mix_u64(std::bit_cast<std::uint64_t>(v));
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

double order_statistic(const Dataset& d, std::size_t j, std::size_t s) {
  return d.order_statistic(j, s);
}

Dataset load_csv(const std::string& path, const std::string& response_col) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::kParse, "'" + path + "' is empty");
  }
  std::vector<std::string> header = split_record(line);
  for (auto& h : header) h = trim(h);

  const auto resp_it = std::find(header.begin(), header.end(), response_col);
  if (resp_it == header.end()) {
    throw Error(ErrorCode::kMissingColumn,
                "response column '" + response_col + "' not found in '" + path + "'");
  }
  const std::size_t resp = static_cast<std::size_t>(resp_it - header.begin());

  std::vector<std::string> names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != resp) names.push_back(header[c]);
  }
  std::vector<std::vector<double>> cols(names.size());
  std::vector<double> y;

  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    auto cells = split_record(line);
    if (cells.size() != header.size()) {
      throw ParseError(row, cells.size() + 1,
                       path + ": row " + std::to_string(row) + " has " +
                           std::to_string(cells.size()) + " cells, expected " +
                           std::to_string(header.size()));
    }
    std::size_t out_col = 0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string cell = trim(cells[c]);
      double v = 0.0;
      const char* first = cell.data();
      const char* last = cell.data() + cell.size();
      if (!cell.empty() && *first == '+') ++first;
      auto res = std::from_chars(first, last, v);
      if (cell.empty() || res.ec != std::errc() || res.ptr != last ||
          !std::isfinite(v)) {
        const std::string what =
            cell.empty() ? "missing value" : "non-numeric value '" + cell + "'";
        throw ParseError(row, c + 1,
                         path + ": " + what + " at row " + std::to_string(row) +
                             ", column " + std::to_string(c + 1) + " ('" +
                             header[c] + "')");
      }
      if (c == resp) {
        y.push_back(v);
      } else {
        cols[out_col++].push_back(v);
      }
    }
  }
  if (y.size() < 2) {
    throw Error(ErrorCode::kTooFewRows,
                path + ": need at least 2 observations, found " +
                    std::to_string(y.size()));
  }
  return Dataset(std::move(names), std::move(cols), std::move(y), response_col);
}

void save_csv(const Dataset& d, const std::string& path, bool sidecar) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  for (const auto& name : d.feature_names()) out << quote_if_needed(name) << ',';
  out << quote_if_needed(d.response_name()) << '\n';
  for (std::size_t i = 0; i < d.n(); ++i) {
    for (std::size_t j = 0; j < d.p(); ++j) out << format_double(d.x(i, j)) << ',';
    out << format_double(d.y()[i]) << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write to '" + path + "' failed");

  if (sidecar) {
    nlohmann::json meta = {{"schema", "treeval.dataset/1"},
                           {"response", d.response_name()},
                           {"n", d.n()},
                           {"p", d.p()},
                           {"checksum", d.checksum()}};
    std::ofstream side(path + ".json");
    if (!side) throw Error(ErrorCode::kIo, "cannot write '" + path + ".json'");
    side << meta.dump(2) << '\n';
  }
}

}  // namespace treeval
