// Copyright 2026 The niaque Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "niaque/errors.hpp"

namespace niaque {

using Index = Eigen::Index;

template <typename Scalar>
using RowMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Shape = std::vector<Index>;

inline std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    os << (i ? "x" : "") << shape[i];
  }
  os << ']';
  return os.str();
}

/// Dense row-major array with an explicit shape.
///
/// Storage is a contiguous Eigen vector. Any tensor can be viewed as a
/// row-major matrix whose column count is the trailing dimension and whose
/// row count is the product of the leading ones; a rank-1 tensor of size n is
/// viewed as a 1 x n matrix. All dimensions are >= 1.
template <typename Scalar>
class BasicTensor {
 public:
  using Storage = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using MatrixMap = Eigen::Map<RowMatrix<Scalar>>;
  using ConstMatrixMap = Eigen::Map<const RowMatrix<Scalar>>;

  BasicTensor() : BasicTensor(Shape{1}) {}

  explicit BasicTensor(Shape shape) : shape_(std::move(shape)) {
    check_shape();
    data_ = Storage::Zero(numel(shape_));
  }

  BasicTensor(Shape shape, std::span<const Scalar> values)
      : shape_(std::move(shape)) {
    check_shape();
    if (static_cast<Index>(values.size()) != numel(shape_)) {
      throw DimensionError("tensor: " + std::to_string(values.size()) +
                           " values for shape " + shape_string(shape_));
    }
    data_ = Eigen::Map<const Storage>(values.data(), values.size());
  }

  BasicTensor(Shape shape, std::initializer_list<Scalar> values)
      : BasicTensor(std::move(shape),
                    std::span<const Scalar>(values.begin(), values.size())) {}

  static BasicTensor vector(std::initializer_list<Scalar> values) {
    return BasicTensor(Shape{static_cast<Index>(values.size())}, values);
  }

  static BasicTensor vector(std::span<const Scalar> values) {
    return BasicTensor(Shape{static_cast<Index>(values.size())}, values);
  }

  template <typename Derived>
  static BasicTensor from_matrix(const Eigen::MatrixBase<Derived>& m) {
    BasicTensor t(Shape{m.rows(), m.cols()});
    t.matrix() = m;
    return t;
  }

  static BasicTensor filled(Shape shape, Scalar value) {
    BasicTensor t(std::move(shape));
    t.data_.setConstant(value);
    return t;
  }

  const Shape& shape() const { return shape_; }
  Index rank() const { return static_cast<Index>(shape_.size()); }
  Index size() const { return data_.size(); }
  Index cols() const { return shape_.back(); }
  Index rows() const { return size() / cols(); }

  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }
  std::span<Scalar> values() { return {data_.data(), std::size_t(size())}; }
  std::span<const Scalar> values() const {
    return {data_.data(), std::size_t(size())};
  }

  Storage& storage() { return data_; }
  const Storage& storage() const { return data_; }

  MatrixMap matrix() { return MatrixMap(data_.data(), rows(), cols()); }
  ConstMatrixMap matrix() const {
    return ConstMatrixMap(data_.data(), rows(), cols());
  }

  Scalar& operator[](Index i) { return data_[i]; }
  Scalar operator[](Index i) const { return data_[i]; }
  Scalar& operator()(Index r, Index c) { return data_[r * cols() + c]; }
  Scalar operator()(Index r, Index c) const { return data_[r * cols() + c]; }

  void set_zero() { data_.setZero(); }
  bool all_finite() const { return data_.allFinite(); }

  /// Same data under a new shape with the same element count.
  BasicTensor reshaped(Shape shape) const {
    BasicTensor t;
    t.shape_ = std::move(shape);
    t.check_shape();
    if (numel(t.shape_) != size()) {
      throw DimensionError("reshape " + shape_string(shape_) + " -> " +
                           shape_string(t.shape_));
    }
    t.data_ = data_;
    return t;
  }

  template <typename Other>
  BasicTensor<Other> cast() const {
    BasicTensor<Other> t(shape_);
    t.storage() = data_.template cast<Other>();
    return t;
  }

  friend bool operator==(const BasicTensor& a, const BasicTensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  static Index numel(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), Index{1},
                           std::multiplies<>());
  }

  void check_shape() const {
    if (shape_.empty() ||
        std::any_of(shape_.begin(), shape_.end(),
                    [](Index d) { return d < 1; })) {
      throw DimensionError("invalid tensor shape " + shape_string(shape_));
    }
  }

  Shape shape_;
  Storage data_;
};

using Tensor = BasicTensor<double>;

/// Throws NonFiniteError naming `what` if `t` holds a NaN or Inf.
template <typename Scalar>
void require_finite(const BasicTensor<Scalar>& t, const std::string& what) {
  if (!t.all_finite()) {
    throw NonFiniteError(what + ": non-finite value in tensor " +
                         shape_string(t.shape()));
  }
}

}  // namespace niaque
