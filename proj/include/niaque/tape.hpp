// Copyright 2026 The niaque Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "niaque/param_store.hpp"
#include "niaque/tensor.hpp"

namespace niaque {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the
/// tape is alive.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  /// Gradient of the last backward pass (zeros if the node was not reached).
  const Tensor& grad() const;
  Tape& tape() const { return *tape_; }
  std::size_t index() const { return index_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t index) : tape_(tape), index_(index) {}

  Tape* tape_ = nullptr;
  std::size_t index_ = 0;
};

/// Record-once, replay-once reverse-mode tape.
///
/// Each differentiable op appends a node holding its output and a closure
/// that propagates the output gradient to its inputs. `backward` walks the
/// nodes in exact reverse recording order and adds parameter gradients into
/// the owning ParamStore (accumulate semantics; the caller zeroes).
class Tape {
 public:
  enum class Mode { training, inference };

  explicit Tape(Mode mode = Mode::training) : mode_(mode) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// Leaf bound to `store[name]`. In inference mode no gradient flows to it.
  Var parameter(ParamStore& store, std::string_view name);
  Var parameter(const ParamStore& store, std::string_view name);

  /// Reverse pass from a scalar loss. Throws TapeError if the loss is not a
  /// single element or the tape was already replayed.
  void backward(const Var& loss);

  Mode mode() const { return mode_; }
  bool consumed() const { return consumed_; }
  std::size_t size() const { return nodes_.size(); }

  // Interface used by op implementations.
  using Backward = std::function<void(Tape&, const Tensor& out_grad)>;
  Var record(const char* op, Tensor value, std::initializer_list<Var> inputs,
             Backward backward);
  const Tensor& value_of(const Var& v) const { return nodes_[v.index_].value; }
  bool requires_grad(const Var& v) const { return nodes_[v.index_].requires_grad; }
  /// Gradient buffer of `v`, allocated on first use.
  Tensor& grad_of(const Var& v);

 private:
  friend class Var;

  struct Node {
    Tensor value;
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    Backward backward;
  };

  Mode mode_;
  bool consumed_ = false;
  std::vector<Node> nodes_;
};

/// Free-function form of Tape::backward.
void backward(const Var& loss);

// Differentiable operations. All inputs must live on the same tape.

/// out = input * weight + bias; input n x a, weight a x b, bias [b].
Var linear(const Var& input, const Var& weight, const Var& bias);
/// out = input * weight.
Var matmul(const Var& input, const Var& weight);
/// max(0, x); the subgradient at 0 is 0.
Var relu(const Var& input);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var scale(const Var& input, double factor);
/// Sum of all elements as a 1-element tensor.
Var sum(const Var& input);
/// Mean over the leading axis of a d x E block -> [E].
Var prototype_pool(const Var& input);
/// Row means over contiguous segments [offsets[s], offsets[s+1]).
Var segment_mean(const Var& input, std::vector<Index> offsets);
/// out.row(n) = input.row(index[n]); backward scatter-adds.
Var gather_rows(const Var& input, std::vector<Index> index);
/// Column concatenation [a | b].
Var concat_cols(const Var& a, const Var& b);
/// Feature-wise affine modulation: (1 + gamma) * h + beta, where
/// `gamma_beta` = [gamma | beta] has twice the columns of `h`.
Var film(const Var& h, const Var& gamma_beta);
/// Mean pinball loss over the single-column predictions.
Var pinball_loss(const Var& predictions, std::span<const double> targets,
                 std::span<const double> quantiles);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(double s, const Var& a) { return scale(a, s); }

}  // namespace niaque
