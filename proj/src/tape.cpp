// Copyright 2026 The niaque Authors.
// SPDX-License-Identifier: Apache-2.0

#include "niaque/tape.hpp"

#include <string>

#include "niaque/kernels.hpp"
#include "niaque/metrics.hpp"

namespace niaque {

const Tensor& Var::value() const { return tape_->value_of(*this); }

const Tensor& Var::grad() const { return tape_->grad_of(*this); }

Var Tape::record(const char* op, Tensor value, std::initializer_list<Var> inputs,
                 Backward backward) {
  require_finite(value, op);
  bool needs = false;
  for (const Var& in : inputs) {
    if (in.tape_ != this) {
      throw TapeError(std::string(op) + ": input recorded on another tape");
    }
    needs = needs || nodes_[in.index_].requires_grad;
  }
  if (consumed_) throw TapeError(std::string(op) + ": tape already replayed");
  Node node;
  node.value = std::move(value);
  node.requires_grad = needs;
  if (needs) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad_of(const Var& v) {
  Node& node = nodes_[v.index_];
  if (!node.has_grad) {
    node.grad = Tensor(node.value.shape());
    node.has_grad = true;
  }
  return node.grad;
}

Var Tape::constant(Tensor value) {
  require_finite(value, "constant");
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(ParamStore& store, std::string_view name) {
  const Index slot = store.index_of(name);
  Node node;
  node.value = store[slot].value;
  if (mode_ == Mode::training) {
    node.requires_grad = true;
    ParamStore* owner = &store;
    node.backward = [owner, slot](Tape&, const Tensor& g) {
      (*owner)[slot].grad.storage() += g.storage();
    };
  }
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(const ParamStore& store, std::string_view name) {
  Node node;
  node.value = store.at(name).value;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Tape::backward(const Var& loss) {
  if (loss.tape_ != this) throw TapeError("backward: loss from another tape");
  if (consumed_) throw TapeError("backward: tape already replayed");
  if (loss.value().size() != 1) {
    throw TapeError("backward: loss must be scalar, got " +
                    shape_string(loss.value().shape()));
  }
  consumed_ = true;
  grad_of(loss)[0] += 1.0;
  for (std::size_t i = loss.index_ + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.requires_grad || !node.has_grad || !node.backward) continue;
    node.backward(*this, node.grad);
  }
}

void backward(const Var& loss) { loss.tape().backward(loss); }

namespace {

Tape& common_tape(const Var& a, const Var& b) {
  if (&a.tape() != &b.tape()) throw TapeError("operands on different tapes");
  return a.tape();
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.value().shape() != b.value().shape()) {
    throw DimensionError(std::string(op) + ": " +
                         shape_string(a.value().shape()) + " vs " +
                         shape_string(b.value().shape()));
  }
}

// dX += G * W^T, row by row.
void accumulate_input_grad(const Tensor& g, const Tensor& w, Tensor& dx) {
  const auto gm = g.matrix();
  const auto wm = w.matrix();
  auto d = dx.matrix();
  for (Index i = 0; i < gm.rows(); ++i) {
    for (Index k = 0; k < wm.rows(); ++k) d(i, k) += gm.row(i).dot(wm.row(k));
  }
}

// dW += X^T * G, accumulated in ascending row order.
void accumulate_weight_grad(const Tensor& x, const Tensor& g, Tensor& dw) {
  const auto xm = x.matrix();
  const auto gm = g.matrix();
  auto d = dw.matrix();
  for (Index i = 0; i < xm.rows(); ++i) {
    for (Index k = 0; k < xm.cols(); ++k) d.row(k).noalias() += xm(i, k) * gm.row(i);
  }
}

void accumulate_bias_grad(const Tensor& g, Tensor& db) {
  const auto gm = g.matrix();
  auto d = db.matrix();
  for (Index i = 0; i < gm.rows(); ++i) d.row(0) += gm.row(i);
}

}  // namespace

Var linear(const Var& input, const Var& weight, const Var& bias) {
  Tape& tape = common_tape(input, weight);
  common_tape(input, bias);
  Tensor out = kernels::linear(input.value(), weight.value(), bias.value());
  return tape.record("linear", std::move(out), {input, weight, bias},
                     [input, weight, bias](Tape& t, const Tensor& g) {
                       if (t.requires_grad(input)) {
                         accumulate_input_grad(g, weight.value(), t.grad_of(input));
                       }
                       if (t.requires_grad(weight)) {
                         accumulate_weight_grad(input.value(), g, t.grad_of(weight));
                       }
                       if (t.requires_grad(bias)) accumulate_bias_grad(g, t.grad_of(bias));
                     });
}

Var matmul(const Var& input, const Var& weight) {
  Tape& tape = common_tape(input, weight);
  Tensor out = kernels::matmul(input.value(), weight.value());
  return tape.record("matmul", std::move(out), {input, weight},
                     [input, weight](Tape& t, const Tensor& g) {
                       if (t.requires_grad(input)) {
                         accumulate_input_grad(g, weight.value(), t.grad_of(input));
                       }
                       if (t.requires_grad(weight)) {
                         accumulate_weight_grad(input.value(), g, t.grad_of(weight));
                       }
                     });
}

Var relu(const Var& input) {
  Tensor out = kernels::relu(input.value());
  return input.tape().record(
      "relu", std::move(out), {input}, [input](Tape& t, const Tensor& g) {
        const auto& x = input.value().storage();
        t.grad_of(input).storage().array() +=
            (x.array() > 0.0).select(g.storage().array(), 0.0);
      });
}

Var add(const Var& a, const Var& b) {
  Tape& tape = common_tape(a, b);
  require_same_shape(a, b, "add");
  Tensor out(a.value().shape());
  out.storage() = a.value().storage() + b.value().storage();
  return tape.record("add", std::move(out), {a, b},
                     [a, b](Tape& t, const Tensor& g) {
                       if (t.requires_grad(a)) t.grad_of(a).storage() += g.storage();
                       if (t.requires_grad(b)) t.grad_of(b).storage() += g.storage();
                     });
}

Var sub(const Var& a, const Var& b) {
  Tape& tape = common_tape(a, b);
  require_same_shape(a, b, "sub");
  Tensor out(a.value().shape());
  out.storage() = a.value().storage() - b.value().storage();
  return tape.record("sub", std::move(out), {a, b},
                     [a, b](Tape& t, const Tensor& g) {
                       if (t.requires_grad(a)) t.grad_of(a).storage() += g.storage();
                       if (t.requires_grad(b)) t.grad_of(b).storage() -= g.storage();
                     });
}

Var scale(const Var& input, double factor) {
  Tensor out(input.value().shape());
  out.storage() = factor * input.value().storage();
  return input.tape().record("scale", std::move(out), {input},
                             [input, factor](Tape& t, const Tensor& g) {
                               t.grad_of(input).storage() += factor * g.storage();
                             });
}

Var sum(const Var& input) {
  Tensor out(Shape{1});
  out[0] = input.value().storage().sum();
  return input.tape().record("sum", std::move(out), {input},
                             [input](Tape& t, const Tensor& g) {
                               t.grad_of(input).storage().array() += g[0];
                             });
}

Var segment_mean(const Var& input, std::vector<Index> offsets) {
  Tensor out = kernels::segment_mean(input.value(), offsets);
  return input.tape().record(
      "segment_mean", std::move(out), {input},
      [input, offsets = std::move(offsets)](Tape& t, const Tensor& g) {
        auto d = t.grad_of(input).matrix();
        const auto gm = g.matrix();
        for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
          const double inv = 1.0 / double(offsets[s + 1] - offsets[s]);
          for (Index i = offsets[s]; i < offsets[s + 1]; ++i) {
            d.row(i) += inv * gm.row(Index(s));
          }
        }
      });
}

Var prototype_pool(const Var& input) {
  if (input.value().rank() != 2) {
    throw DimensionError("prototype_pool: expects a d x E block");
  }
  const Index rows = input.value().rows();
  Tensor out = kernels::prototype_pool(input.value());
  return input.tape().record("prototype_pool", std::move(out), {input},
                             [input, rows](Tape& t, const Tensor& g) {
                               auto d = t.grad_of(input).matrix();
                               const auto gm = g.matrix();
                               for (Index i = 0; i < rows; ++i) {
                                 d.row(i) += gm.row(0) / double(rows);
                               }
                             });
}

Var gather_rows(const Var& input, std::vector<Index> index) {
  Tensor out = kernels::gather_rows(input.value(), index);
  return input.tape().record(
      "gather_rows", std::move(out), {input},
      [input, index = std::move(index)](Tape& t, const Tensor& g) {
        auto d = t.grad_of(input).matrix();
        const auto gm = g.matrix();
        for (std::size_t n = 0; n < index.size(); ++n) d.row(index[n]) += gm.row(Index(n));
      });
}

Var concat_cols(const Var& a, const Var& b) {
  Tape& tape = common_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rows() != bv.rows()) {
    throw DimensionError("concat_cols: " + shape_string(av.shape()) + " vs " +
                         shape_string(bv.shape()));
  }
  const Index ca = av.cols(), cb = bv.cols();
  Tensor out(Shape{av.rows(), ca + cb});
  out.matrix().leftCols(ca) = av.matrix();
  out.matrix().rightCols(cb) = bv.matrix();
  return tape.record("concat_cols", std::move(out), {a, b},
                     [a, b, ca, cb](Tape& t, const Tensor& g) {
                       if (t.requires_grad(a)) t.grad_of(a).matrix() += g.matrix().leftCols(ca);
                       if (t.requires_grad(b)) t.grad_of(b).matrix() += g.matrix().rightCols(cb);
                     });
}

Var film(const Var& h, const Var& gamma_beta) {
  Tape& tape = common_tape(h, gamma_beta);
  const Tensor& hv = h.value();
  const Tensor& gb = gamma_beta.value();
  const Index w = hv.cols();
  if (gb.rows() != hv.rows() || gb.cols() != 2 * w) {
    throw DimensionError("film: h " + shape_string(hv.shape()) +
                         " vs gamma|beta " + shape_string(gb.shape()));
  }
  Tensor out(Shape{hv.rows(), w});
  out.matrix().array() = (1.0 + gb.matrix().leftCols(w).array()) * hv.matrix().array() +
                         gb.matrix().rightCols(w).array();
  return tape.record(
      "film", std::move(out), {h, gamma_beta}, [h, gamma_beta, w](Tape& t, const Tensor& g) {
        const auto gm = g.matrix().array();
        const auto gbm = gamma_beta.value().matrix();
        if (t.requires_grad(h)) {
          t.grad_of(h).matrix().array() += gm * (1.0 + gbm.leftCols(w).array());
        }
        if (t.requires_grad(gamma_beta)) {
          auto d = t.grad_of(gamma_beta).matrix();
          d.leftCols(w).array() += gm * h.value().matrix().array();
          d.rightCols(w).array() += gm;
        }
      });
}

Var pinball_loss(const Var& predictions, std::span<const double> targets,
                 std::span<const double> quantiles) {
  const Tensor& p = predictions.value();
  const std::size_t n = targets.size();
  if (p.cols() != 1 || std::size_t(p.rows()) != n || quantiles.size() != n || n == 0) {
    throw DimensionError("pinball_loss: predictions " + shape_string(p.shape()) +
                         ", " + std::to_string(n) + " targets, " +
                         std::to_string(quantiles.size()) + " quantiles");
  }
  std::vector<double> terms(n);
  std::vector<double> slope(n);
  for (std::size_t i = 0; i < n; ++i) {
    terms[i] = pinball(targets[i], p[Index(i)], quantiles[i]);
    // d/dyhat of (y - yhat)(q - 1{y <= yhat})
    slope[i] = -(quantiles[i] - (targets[i] <= p[Index(i)] ? 1.0 : 0.0)) / double(n);
  }
  Tensor out(Shape{1});
  // Sorted accumulation makes the mean independent of row order.
  out[0] = kernels::canonical_sum(terms) / double(n);
  return predictions.tape().record(
      "pinball_loss", std::move(out), {predictions},
      [predictions, slope = std::move(slope)](Tape& t, const Tensor& g) {
        auto& d = t.grad_of(predictions);
        for (std::size_t i = 0; i < slope.size(); ++i) d[Index(i)] += g[0] * slope[i];
      });
}

}  // namespace niaque
