// Copyright 2026 The niaque Authors.
// SPDX-License-Identifier: Apache-2.0

#include "niaque/optim.hpp"

#include <cmath>
#include <string>

namespace niaque {

void adam_step(ParamStore& params, double lr, double beta1, double beta2,
               double eps) {
  if (!(lr > 0.0)) throw DomainError("adam_step: learning rate must be positive");
  for (const auto& p : params) {
    if (!p.grad.all_finite()) {
      throw NonFiniteError("adam_step: non-finite gradient in parameter '" +
                           p.name + "'");
    }
  }
  params.step_count += 1;
  const double t = double(params.step_count);
  const double c1 = 1.0 - std::pow(beta1, t);
  const double c2 = 1.0 - std::pow(beta2, t);
  for (auto& p : params) {
    auto g = p.grad.storage().array();
    auto m = p.first_moment.storage().array();
    auto v = p.second_moment.storage().array();
    m = beta1 * m + (1.0 - beta1) * g;
    v = beta2 * v + (1.0 - beta2) * g.square();
    p.value.storage().array() -= lr * (m / c1) / ((v / c2).sqrt() + eps);
  }
}

}  // namespace niaque
