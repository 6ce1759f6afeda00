// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace asp {

/// Base class for all errors raised by the library. The kind maps onto the
/// CLI exit codes (usage = 1, validation = 2, numeric = 3).
class Error : public std::runtime_error {
 public:
  enum class Kind { Usage, Validation, Numeric };

  Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Shape or width mismatch between arrays or declared signatures.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(Kind::Validation, what) {}
};

/// Input violates a precondition (empty batch, bad config, malformed file).
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(Kind::Validation, what) {}
};

/// Non-finite values or divergence.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(Kind::Numeric, what) {}
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(Kind::Usage, what) {}
};

}  // namespace asp
