// Copyright 2026 The niaque Authors.
// SPDX-License-Identifier: Apache-2.0

#include "niaque/interpret.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "niaque/errors.hpp"
#include "niaque/kernels.hpp"
#include "niaque/metrics.hpp"

namespace niaque {

double marginal_ci(const NiaqueModel& model, std::span<const FeatureRow> rows,
                   std::int64_t feature_id, double alpha) {
  if (!(alpha > 0 && alpha < 1)) throw DomainError("marginal_ci: alpha must lie in (0, 1)");
  std::vector<FeatureRow> single;
  for (const auto& row : rows) {
    for (Index i = 0; i < row.size(); ++i) {
      if (row.feature_ids[std::size_t(i)] == feature_id) {
        single.push_back(FeatureRow{{feature_id}, {row.values[std::size_t(i)]}, std::nullopt});
        break;
      }
    }
  }
  if (single.empty()) {
    throw DataError("marginal_ci: no row contains feature " + std::to_string(feature_id));
  }
  const double levels[] = {alpha / 2, 1 - alpha / 2};
  const auto pred = forward(model, single, levels);
  std::vector<double> widths(single.size());
  for (Index r = 0; r < Index(single.size()); ++r) {
    widths[std::size_t(r)] = pred.values(r, 1) - pred.values(r, 0);
  }
  return kernels::canonical_sum(widths) / double(widths.size());
}

ImportanceReport importance_from_widths(std::span<const std::int64_t> ids,
                                        std::span<const double> widths) {
  if (ids.size() != widths.size() || ids.empty()) {
    throw DimensionError("importance: need one width per feature");
  }
  std::string bad;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!(widths[i] > 0) || !std::isfinite(widths[i])) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%s%lld (width %.6g)", bad.empty() ? "" : ", ",
                    static_cast<long long>(ids[i]), widths[i]);
      bad += buf;
    }
  }
  if (!bad.empty()) {
    throw DegenerateModelError("importance: non-positive interval width for feature " + bad);
  }
  std::vector<double> inverse(widths.size());
  for (std::size_t i = 0; i < widths.size(); ++i) inverse[i] = 1.0 / widths[i];
  std::vector<double> sorted = inverse;
  const double total = kernels::canonical_sum(sorted);

  ImportanceReport report;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    report.features.push_back({ids[i], "", "", widths[i], inverse[i] / total});
  }
  std::stable_sort(report.features.begin(), report.features.end(),
                   [](const FeatureImportance& a, const FeatureImportance& b) {
                     if (a.weight != b.weight) return a.weight > b.weight;
                     return a.feature_id < b.feature_id;
                   });
  return report;
}

ImportanceReport importance_weights(const NiaqueModel& model, const SplitDataset& dataset,
                                    double alpha) {
  if (!dataset.bound()) throw DataError("importance: dataset is not registered");
  const auto& rows = dataset.val.empty() ? dataset.train : dataset.val;
  std::vector<std::int64_t> ids;
  std::vector<double> widths;
  for (std::int64_t id : dataset.meta.feature_ids) {
    ids.push_back(id);
    widths.push_back(marginal_ci(model, rows, id, alpha));
  }
  ImportanceReport report = importance_from_widths(ids, widths);
  for (auto& f : report.features) {
    const auto it =
        std::find(dataset.meta.feature_ids.begin(), dataset.meta.feature_ids.end(), f.feature_id);
    f.dataset = dataset.meta.name;
    f.column = dataset.meta.columns[std::size_t(it - dataset.meta.feature_ids.begin())].name;
  }
  return report;
}

std::string ImportanceReport::to_csv() const {
  std::string out = "feature_id,dataset,column,ci_width,weight\n";
  char buf[64];
  for (const auto& f : features) {
    out += std::to_string(f.feature_id) + "," + f.dataset + "," + f.column + ",";
    std::snprintf(buf, sizeof buf, "%.6g,%.6g\n", f.ci_width, f.weight);
    out += buf;
  }
  return out;
}

namespace {

double median_aad(const NiaqueModel& model, std::span<const FeatureRow> rows) {
  const double level[] = {0.5};
  const auto pred = forward(model, rows, level);
  std::vector<double> y;
  for (const auto& r : rows) y.push_back(*r.target);
  return point_metrics(y, pred.values.values()).aad;
}

}  // namespace

double removal_response(const NiaqueModel& model, const SplitDataset& dataset,
                        const ImportanceReport& report, bool from_top, int k) {
  const auto& rows = dataset.test;
  if (rows.empty()) throw DataError("removal_response: empty test split");
  if (k < 0 || std::size_t(k) >= report.features.size()) {
    throw DomainError("removal_response: k must lie in [0, n_features)");
  }
  if (k == 0) return 0.0;
  std::set<std::int64_t> removed;
  for (int i = 0; i < k; ++i) {
    const auto& f = from_top ? report.features[std::size_t(i)]
                             : report.features[report.features.size() - 1 - std::size_t(i)];
    removed.insert(f.feature_id);
  }
  std::vector<FeatureRow> reduced;
  reduced.reserve(rows.size());
  for (const auto& row : rows) {
    FeatureRow r;
    r.target = row.target;
    for (Index i = 0; i < row.size(); ++i) {
      if (removed.count(row.feature_ids[std::size_t(i)])) continue;
      r.feature_ids.push_back(row.feature_ids[std::size_t(i)]);
      r.values.push_back(row.values[std::size_t(i)]);
    }
    if (r.size() == 0) throw DataError("removal_response: removal would empty a row");
    reduced.push_back(std::move(r));
  }
  return median_aad(model, reduced) - median_aad(model, rows);
}

}  // namespace niaque
