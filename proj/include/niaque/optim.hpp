// Copyright 2026 The niaque Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "niaque/param_store.hpp"

namespace niaque {

/// One bias-corrected Adam update over every parameter in `params`.
/// Increments `params.step_count`; leaves the gradients in place. Throws
/// NonFiniteError naming the first parameter whose gradient is not finite,
/// before anything is modified.
void adam_step(ParamStore& params, double lr, double beta1 = 0.9,
               double beta2 = 0.999, double eps = 1e-8);

}  // namespace niaque
