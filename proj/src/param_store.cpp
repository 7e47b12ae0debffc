// Copyright 2026 The niaque Authors.
// SPDX-License-Identifier: Apache-2.0

#include "niaque/param_store.hpp"

#include <stdexcept>

namespace niaque {

Parameter& ParamStore::add(std::string name, Tensor value) {
  if (by_name_.count(name)) {
    throw std::invalid_argument("duplicate parameter '" + name + "'");
  }
  Tensor zeros(value.shape());
  by_name_.emplace(name, Index(entries_.size()));
  entries_.push_back(
      Parameter{std::move(name), std::move(value), zeros, zeros, zeros});
  return entries_.back();
}

bool ParamStore::contains(std::string_view name) const {
  return by_name_.find(name) != by_name_.end();
}

Index ParamStore::index_of(std::string_view name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) {
    throw std::out_of_range("unknown parameter '" + std::string(name) + "'");
  }
  return it->second;
}

Parameter& ParamStore::at(std::string_view name) {
  return entries_[std::size_t(index_of(name))];
}

const Parameter& ParamStore::at(std::string_view name) const {
  return entries_[std::size_t(index_of(name))];
}

void ParamStore::zero_grad() {
  for (auto& p : entries_) p.grad.set_zero();
}

Index ParamStore::numel() const {
  Index n = 0;
  for (const auto& p : entries_) n += p.value.size();
  return n;
}

}  // namespace niaque
