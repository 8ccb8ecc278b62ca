// Copyright 2026 The parrot-fusion Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace parrot {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree, or an input is too small for an op.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A hyperparameter or argument is outside its valid range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// An operation was invoked in the wrong order (e.g. backward before forward).
class StateError : public Error {
 public:
  using Error::Error;
};

/// NaN or Inf appeared where a finite value is required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Two feature tables cannot be paired row-for-row.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

/// Not enough samples to honour a split request.
class SplitError : public Error {
 public:
  using Error::Error;
};

enum class FormatErrorKind {
  io,
  empty_file,
  malformed_header,
  ragged_row,
  bad_number,
  non_finite,
  duplicate_id,
  unknown_label,
  bad_magic,
  unsupported_version,
  truncated,
};

const char* to_string(FormatErrorKind kind);

/// A file did not parse. `kind()` tells callers which rule was violated.
class FormatError : public Error {
 public:
  FormatError(FormatErrorKind kind, const std::string& what)
      : Error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  FormatErrorKind kind() const noexcept { return kind_; }

 private:
  FormatErrorKind kind_;
};

}  // namespace parrot
