/*
 * Copyright 2026 The setcal Authors.
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

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace setcal {

// Base class for every error raised by the library. Callers that only need
// to distinguish "bad data" from "bad usage" can catch the two subclasses.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid arguments passed by the caller (out-of-range k, empty sets, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Problems with input data. Carries the 1-based line number when the data
// came from a record file (0 otherwise).
class DataError : public Error {
 public:
  DataError(const std::string& what, std::size_t line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Malformed JSON or wrong field types.
class ParseError : public DataError {
 public:
  using DataError::DataError;
};

// Matrix dimensions disagree with the candidate count.
class SchemaError : public DataError {
 public:
  using DataError::DataError;
};

// A value that must lie in [0, 1] does not.
class RangeError : public DataError {
 public:
  using DataError::DataError;
};

// An operation needs a feature (matrix, score, mlg) the record lacks.
class FeatureMissingError : public DataError {
 public:
  FeatureMissingError(const std::string& record_id, const std::string& feature)
      : DataError("record '" + record_id + "' is missing " + feature),
        record_id_(record_id),
        feature_(feature) {}

  const std::string& record_id() const { return record_id_; }
  const std::string& feature() const { return feature_; }

 private:
  std::string record_id_;
  std::string feature_;
};

}  // namespace setcal
