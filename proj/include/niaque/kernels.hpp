// Copyright 2026 The niaque Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "niaque/tensor.hpp"

namespace niaque {

/// Per-thread count of multiply-accumulates issued by the matrix kernels.
/// Only forward products are counted; backward passes leave it untouched.
inline std::uint64_t& mac_counter() {
  thread_local std::uint64_t count = 0;
  return count;
}

namespace kernels {

// Every output row of a product is accumulated over the inner dimension in
// ascending order, one row at a time. A row's result therefore never depends
// on which other rows share the call, so batching is bit-transparent.

template <typename Scalar>
void accumulate_product(const BasicTensor<Scalar>& input,
                        const BasicTensor<Scalar>& weight,
                        BasicTensor<Scalar>& out) {
  const auto x = input.matrix();
  const auto w = weight.matrix();
  auto o = out.matrix();
  for (Index i = 0; i < x.rows(); ++i) {
    auto row = o.row(i);
    for (Index k = 0; k < x.cols(); ++k) {
      row.noalias() += x(i, k) * w.row(k);
    }
  }
  mac_counter() += std::uint64_t(x.rows()) * x.cols() * w.cols();
}

template <typename Scalar>
void check_product_shapes(const BasicTensor<Scalar>& input,
                          const BasicTensor<Scalar>& weight,
                          const char* op) {
  if (weight.rank() != 2 || input.cols() != weight.rows()) {
    throw DimensionError(std::string(op) + ": input " +
                         shape_string(input.shape()) + " vs weight " +
                         shape_string(weight.shape()));
  }
}

/// out = input * weight.
template <typename Scalar>
BasicTensor<Scalar> matmul(const BasicTensor<Scalar>& input,
                           const BasicTensor<Scalar>& weight) {
  check_product_shapes(input, weight, "matmul");
  BasicTensor<Scalar> out(Shape{input.rows(), weight.cols()});
  accumulate_product(input, weight, out);
  return out;
}

/// out[i,j] = sum_k input[i,k] * weight[k,j] + bias[j].
template <typename Scalar>
BasicTensor<Scalar> linear(const BasicTensor<Scalar>& input,
                           const BasicTensor<Scalar>& weight,
                           const BasicTensor<Scalar>& bias) {
  check_product_shapes(input, weight, "linear");
  if (bias.size() != weight.cols()) {
    throw DimensionError("linear: bias " + shape_string(bias.shape()) +
                         " vs weight " + shape_string(weight.shape()));
  }
  BasicTensor<Scalar> out(Shape{input.rows(), weight.cols()});
  out.matrix().rowwise() = bias.storage().transpose();
  accumulate_product(input, weight, out);
  return out;
}

template <typename Scalar>
BasicTensor<Scalar> relu(const BasicTensor<Scalar>& input) {
  BasicTensor<Scalar> out(input.shape());
  out.storage() = input.storage().cwiseMax(Scalar(0));
  return out;
}

/// Sum of `values` accumulated in ascending order, so any permutation of
/// the inputs gives the same bits.
template <typename Scalar>
Scalar canonical_sum(std::vector<Scalar>& values) {
  std::sort(values.begin(), values.end());
  Scalar sum = 0;
  for (Scalar v : values) sum += v;
  return sum;
}

/// Row-means of `input` over contiguous segments: segment s spans rows
/// [offsets[s], offsets[s+1]). Result is (offsets.size()-1) x cols.
template <typename Scalar>
BasicTensor<Scalar> segment_mean(const BasicTensor<Scalar>& input,
                                 std::span<const Index> offsets) {
  if (offsets.size() < 2 || offsets.front() != 0 ||
      offsets.back() != input.rows()) {
    throw DimensionError("segment_mean: offsets do not cover input rows");
  }
  const Index segments = Index(offsets.size()) - 1;
  BasicTensor<Scalar> out(Shape{segments, input.cols()});
  std::vector<Scalar> column;
  for (Index s = 0; s < segments; ++s) {
    const Index begin = offsets[s], end = offsets[s + 1];
    if (end <= begin) {
      throw DimensionError("segment_mean: empty segment " + std::to_string(s));
    }
    for (Index j = 0; j < input.cols(); ++j) {
      column.clear();
      for (Index i = begin; i < end; ++i) column.push_back(input(i, j));
      out(s, j) = canonical_sum(column) / Scalar(end - begin);
    }
  }
  return out;
}

/// Mean over the feature axis of a d x E block: out[j] = (1/d) sum_i in[i,j].
template <typename Scalar>
BasicTensor<Scalar> prototype_pool(const BasicTensor<Scalar>& input) {
  const std::vector<Index> offsets{0, input.rows()};
  return segment_mean(input, offsets).reshaped(Shape{input.cols()});
}

/// out.row(n) = input.row(index[n]).
template <typename Scalar>
BasicTensor<Scalar> gather_rows(const BasicTensor<Scalar>& input,
                                std::span<const Index> index) {
  if (index.empty()) throw DimensionError("gather_rows: empty index");
  BasicTensor<Scalar> out(Shape{Index(index.size()), input.cols()});
  const auto in = input.matrix();
  auto o = out.matrix();
  for (std::size_t n = 0; n < index.size(); ++n) {
    if (index[n] < 0 || index[n] >= in.rows()) {
      throw DimensionError("gather_rows: index " + std::to_string(index[n]) +
                           " outside " + std::to_string(in.rows()) + " rows");
    }
    o.row(Index(n)) = in.row(index[n]);
  }
  return out;
}

}  // namespace kernels
}  // namespace niaque
