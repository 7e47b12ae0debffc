// Copyright 2026 The niaque Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "niaque/data.hpp"
#include "niaque/model.hpp"

namespace niaque {

/// Mean width of the (1 - alpha) interval predicted from feature `feature_id`
/// alone, over the rows that contain it:
///   mean_i f(x_s, 1 - alpha/2) - f(x_s, alpha/2).
/// Throws DataError if no row contains the feature.
double marginal_ci(const NiaqueModel& model, std::span<const FeatureRow> rows,
                   std::int64_t feature_id, double alpha = 0.05);

struct FeatureImportance {
  std::int64_t feature_id = 0;
  std::string dataset;
  std::string column;
  double ci_width = 0;
  double weight = 0;
};

struct ImportanceReport {
  /// Sorted by descending weight, ties by ascending ID.
  std::vector<FeatureImportance> features;

  /// `feature_id,dataset,column,ci_width,weight` with a header line.
  std::string to_csv() const;
};

/// Weights proportional to the inverse marginal interval width, normalized
/// to sum to one, for every column of `dataset` (scored on its val split).
/// Throws DegenerateModelError listing the features whose width is not
/// positive.
ImportanceReport importance_weights(const NiaqueModel& model, const SplitDataset& dataset,
                                    double alpha = 0.05);
/// The same from explicit widths (index i of `widths` belongs to `ids[i]`).
ImportanceReport importance_from_widths(std::span<const std::int64_t> ids,
                                        std::span<const double> widths);

/// Median-prediction AAD on the test split with the k highest (or lowest)
/// weighted features removed from every row, minus the AAD with all
/// features present. Throws DataError if removal would empty a row.
double removal_response(const NiaqueModel& model, const SplitDataset& dataset,
                        const ImportanceReport& report, bool from_top, int k);

}  // namespace niaque
