// Copyright 2026 The niaque Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "niaque/data.hpp"
#include "niaque/random.hpp"

namespace niaque {

/// y = mean(x) + scale(x) * eps with eps ~ N(0, 1) and x ~ U(-1, 1)^d, where
///   mean(x)  = offset + sum_j weight_j x_j + amplitude * sin(frequency * x_k)
///   scale(x) = scale_base + scale_slope * |x_1|.
struct SyntheticTask {
  std::string name = "hetero-gaussian";
  int dimension = 5;
  std::vector<double> mean_weights{2.0, -1.0};
  double mean_offset = 0;
  double sine_amplitude = 0;
  double sine_frequency = 3;
  int sine_feature = 0;
  double scale_base = 0.5;
  double scale_slope = 0.5;

  double mean(std::span<const double> x) const;
  double scale(std::span<const double> x) const;
  /// Throws DomainError unless the scale is positive everywhere and the
  /// weights fit the dimension.
  void validate() const;

  nlohmann::json to_json() const;
  static SyntheticTask from_json(const nlohmann::json& j);

  /// d = 5, mean 2 x1 - x2, scale 0.5 + 0.5 |x1|; x3..x5 carry no signal.
  static SyntheticTask hetero_gaussian();
  /// As hetero_gaussian with a constant scale of 0.5.
  static SyntheticTask homoscedastic();
  /// As hetero_gaussian plus 0.75 sin(3 x1).
  static SyntheticTask sine();
  /// Member `index` of a family of related tasks: coefficients jittered
  /// around the sine task, drawn from `seed`.
  static SyntheticTask related(int index, std::uint64_t seed);
  /// Looks up one of the named tasks above; `related-<k>` uses `seed`.
  static SyntheticTask named(const std::string& name, std::uint64_t seed = 0);
};

/// Columns x1..xd then y, one row per draw.
Table synthesize(const SyntheticTask& task, Index n, Rng& rng);

/// Draws n rows with `seed` and runs them through ingest_table.
SplitDataset generate(const SyntheticTask& task, Index n, std::uint64_t seed);

/// mean(x) + scale(x) * Phi^-1(q).
double true_quantile(const SyntheticTask& task, std::span<const double> x, double q);
/// Expected CRPS of the ideal predictor at x, scale(x) / sqrt(pi).
double true_crps(const SyntheticTask& task, std::span<const double> x);

/// The same oracles on the dataset's normalized target scale.
double true_quantile(const SyntheticTask& task, const DatasetMeta& meta,
                     std::span<const double> x, double q);
double true_crps(const SyntheticTask& task, const DatasetMeta& meta, std::span<const double> x);
double true_scale(const SyntheticTask& task, const DatasetMeta& meta, std::span<const double> x);

/// Recovers x1..xd of a fully observed row of a generated dataset.
std::vector<double> task_inputs(const FeatureRow& row, const DatasetMeta& meta);

}  // namespace niaque
