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

#ifndef TREEVAL_ERROR_HPP_
#define TREEVAL_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace treeval {

// Mirrors the status codes of the C API (include/treeval/treeval.h).
enum class ErrorCode : int {
  kIo = 1,
  kParse = 2,
  kMissingColumn = 3,
  kTooFewRows = 4,
  kInvalidArgument = 5,
  kOutOfRange = 6,
  kDegenerate = 7,
  kInconsistent = 8,
  kInternal = 9,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// A CSV cell could not be read. Row and column are 1-based, the header is
// row 1.
class ParseError : public Error {
 public:
  ParseError(std::size_t row, std::size_t column, const std::string& what)
      : Error(ErrorCode::kParse, what), row_(row), column_(column) {}

  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

}  // namespace treeval

#endif  // TREEVAL_ERROR_HPP_
