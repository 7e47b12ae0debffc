// Copyright 2026 The niaque Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace niaque {

/// Standard normal density.
double normal_pdf(double z);
/// Standard normal CDF.
double normal_cdf(double z);
/// Standard normal inverse CDF. Rational approximation with one Halley
/// refinement step; absolute error well below 1e-8 on (0, 1).
double normal_quantile(double p);

/// Closed-form CRPS of N(mean, sd^2) at observation y:
/// sd * [z(2 Phi(z) - 1) + 2 phi(z) - 1/sqrt(pi)], z = (y - mean) / sd.
/// sd == 0 gives |y - mean|.
double gaussian_crps(double mean, double sd, double y);

}  // namespace niaque
