// Copyright 2026 The niaque Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace niaque {

/// Tensor shapes that do not line up.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of an operation (q outside (0,1),
/// log of a value below -1, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A NaN or Inf appeared where only finite values are allowed.
class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TapeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Feature ID not covered by the embedding table, or a malformed feature row.
class VocabularyError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Embedding table too small for the registered feature IDs.
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The model collapsed (e.g. a zero-width confidence interval).
class DegenerateModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace niaque
