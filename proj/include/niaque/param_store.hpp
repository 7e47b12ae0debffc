// Copyright 2026 The niaque Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "niaque/tensor.hpp"

namespace niaque {

/// A named trainable tensor with its gradient buffer and Adam moments.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor first_moment;
  Tensor second_moment;
};

/// Ordered collection of parameters. Iteration follows insertion order.
class ParamStore {
 public:
  /// Adds a parameter; throws std::invalid_argument on duplicate names.
  Parameter& add(std::string name, Tensor value);

  bool contains(std::string_view name) const;
  Parameter& at(std::string_view name);
  const Parameter& at(std::string_view name) const;
  Index index_of(std::string_view name) const;

  Parameter& operator[](Index i) { return entries_[std::size_t(i)]; }
  const Parameter& operator[](Index i) const { return entries_[std::size_t(i)]; }
  Index size() const { return Index(entries_.size()); }

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  void zero_grad();
  /// Total number of scalar parameters.
  Index numel() const;

  std::uint64_t step_count = 0;

 private:
  std::vector<Parameter> entries_;
  std::map<std::string, Index, std::less<>> by_name_;
};

}  // namespace niaque
