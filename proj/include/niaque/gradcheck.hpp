// Copyright 2026 The niaque Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "niaque/model.hpp"
#include "niaque/param_store.hpp"
#include "niaque/tape.hpp"

namespace niaque {

struct GradientCheckReport {
  double max_relative_error = 0;
  std::string worst_parameter;
  Index worst_index = -1;
  double analytic = 0;
  double numeric = 0;
  Index checked = 0;
};

/// Builds a scalar loss on the given tape from the parameters in the store
/// the check was called with.
using LossBuilder = std::function<Var(Tape&)>;

/// Compares reverse-mode gradients of `loss` against central differences
/// with step `step`, coordinate by coordinate. The relative error of a
/// coordinate is |a - n| / max(|a|, |n|, floor). Leaves values unchanged and
/// gradients zeroed.
GradientCheckReport check_gradients(ParamStore& params, const LossBuilder& loss,
                                    double step = 1e-5, double floor = 1e-6);

/// Random tiny configuration with R <= 3, L <= 2, E <= 16.
NiaqueConfig random_tiny_config(Rng& rng);

/// Randomly initialized model (FiLM included) with a random batch of rows of
/// up to `max_features` features and random quantile levels, checked under
/// the mean pinball loss.
GradientCheckReport check_model_gradients(const NiaqueConfig& config, std::uint64_t seed,
                                          int max_features = 6, int batch_rows = 3);

}  // namespace niaque
