// Copyright 2026 The niaque Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "niaque/tensor.hpp"

namespace niaque {

/// Quantile (pinball) loss (y - yhat)(q - 1{y <= yhat}). Throws DomainError
/// unless 0 < q < 1.
double pinball(double y, double yhat, double q);

/// Sample CRPS: 2/(S*Q) * sum_i sum_j pinball(y_i, yhat(i,j), q_j), with
/// `yhat` an S x Q tensor aligned with `quantiles`.
double crps_sample(std::span<const double> y, const Tensor& yhat,
                   std::span<const double> quantiles);

struct PointMetrics {
  double smape = 0;  // percent
  double aad = 0;
  double bias = 0;
  double rmse = 0;
  double rmsle = 0;
};

/// Point-prediction metrics of the median forecast. A SMAPE term with
/// |y| + |yhat| == 0 contributes 0. Throws DomainError for RMSLE when any
/// value is <= -1.
PointMetrics point_metrics(std::span<const double> y,
                           std::span<const double> median);

/// 100 * fraction of y strictly inside (low, high).
double coverage(std::span<const double> y, std::span<const double> low,
                std::span<const double> high);

struct MetricReport {
  double smape = 0;
  double aad = 0;
  double bias = 0;
  double rmse = 0;
  double rmsle = 0;
  double crps = 0;
  /// Confidence level (e.g. 0.95) -> coverage percentage.
  std::map<double, double> coverage_at;

  /// One `name=value` line per metric, 6 significant digits, each name
  /// prefixed with `prefix`. Coverage keys read `coverage@95`.
  std::string to_text(const std::string& prefix = "") const;
};

/// Parses `name=value` lines back into a flat map; blank lines are skipped.
std::map<std::string, double> parse_metric_text(const std::string& text);

/// Seed of the shared evaluation quantile draw.
inline constexpr std::uint64_t kEvaluationQuantileSeed = 1729;

/// Q levels drawn i.i.d. from U(0,1) with the given seed.
std::vector<double> evaluation_quantiles(int count,
                                         std::uint64_t seed = kEvaluationQuantileSeed);

}  // namespace niaque
