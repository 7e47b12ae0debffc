// Copyright 2026 The niaque Authors.
// SPDX-License-Identifier: Apache-2.0

#include "niaque/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "niaque/errors.hpp"
#include "niaque/normal.hpp"

namespace niaque {

double SyntheticTask::mean(std::span<const double> x) const {
  double m = mean_offset;
  for (std::size_t j = 0; j < mean_weights.size(); ++j) m += mean_weights[j] * x[j];
  if (sine_amplitude != 0) {
    m += sine_amplitude * std::sin(sine_frequency * x[std::size_t(sine_feature)]);
  }
  return m;
}

double SyntheticTask::scale(std::span<const double> x) const {
  return scale_base + scale_slope * std::abs(x[0]);
}

void SyntheticTask::validate() const {
  if (dimension < 1) throw DomainError("synthetic task: dimension must be positive");
  if (int(mean_weights.size()) > dimension) {
    throw DomainError("synthetic task: more mean weights than features");
  }
  if (sine_feature < 0 || sine_feature >= dimension) {
    throw DomainError("synthetic task: sine feature out of range");
  }
  // |x1| ranges over [0, 1], so the scale is linear between its endpoints.
  if (!(scale_base > 0) || !(scale_base + scale_slope > 0)) {
    throw DomainError("synthetic task: scale must stay positive");
  }
}

nlohmann::json SyntheticTask::to_json() const {
  return {{"name", name},
          {"dimension", dimension},
          {"mean_weights", mean_weights},
          {"mean_offset", mean_offset},
          {"sine_amplitude", sine_amplitude},
          {"sine_frequency", sine_frequency},
          {"sine_feature", sine_feature},
          {"scale_base", scale_base},
          {"scale_slope", scale_slope},
          {"noise", "standard-normal"}};
}

SyntheticTask SyntheticTask::from_json(const nlohmann::json& j) {
  SyntheticTask t;
  try {
    t.name = j.at("name").get<std::string>();
    t.dimension = j.at("dimension").get<int>();
    t.mean_weights = j.at("mean_weights").get<std::vector<double>>();
    t.mean_offset = j.at("mean_offset").get<double>();
    t.sine_amplitude = j.at("sine_amplitude").get<double>();
    t.sine_frequency = j.at("sine_frequency").get<double>();
    t.sine_feature = j.at("sine_feature").get<int>();
    t.scale_base = j.at("scale_base").get<double>();
    t.scale_slope = j.at("scale_slope").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("synthetic task: ") + e.what());
  }
  t.validate();
  return t;
}

SyntheticTask SyntheticTask::hetero_gaussian() { return SyntheticTask{}; }

SyntheticTask SyntheticTask::homoscedastic() {
  SyntheticTask t;
  t.name = "homoscedastic";
  t.scale_slope = 0;
  return t;
}

SyntheticTask SyntheticTask::sine() {
  SyntheticTask t;
  t.name = "sine";
  t.sine_amplitude = 0.75;
  return t;
}

SyntheticTask SyntheticTask::related(int index, std::uint64_t seed) {
  Rng rng = make_stream(seed, "related-task-" + std::to_string(index));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SyntheticTask t = sine();
  t.name = "related-" + std::to_string(index);
  t.mean_weights = {2.0 + 0.5 * u(rng), -1.0 + 0.5 * u(rng)};
  t.mean_offset = 0.5 * u(rng);
  t.sine_amplitude = 0.75 + 0.25 * u(rng);
  t.sine_frequency = 3.0 + 0.5 * u(rng);
  t.scale_base = 0.5 + 0.1 * u(rng);
  t.scale_slope = 0.5 + 0.2 * u(rng);
  return t;
}

SyntheticTask SyntheticTask::named(const std::string& name, std::uint64_t seed) {
  if (name == "hetero-gaussian") return hetero_gaussian();
  if (name == "homoscedastic") return homoscedastic();
  if (name == "sine") return sine();
  const std::string prefix = "related-";
  if (name.rfind(prefix, 0) == 0) {
    int index = -1;
    if (std::sscanf(name.c_str() + prefix.size(), "%d", &index) == 1 && index >= 0) {
      return related(index, seed);
    }
  }
  throw DomainError("unknown synthetic task '" + name + "'");
}

Table synthesize(const SyntheticTask& task, Index n, Rng& rng) {
  task.validate();
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  Table table;
  for (int j = 1; j <= task.dimension; ++j) table.columns.push_back("x" + std::to_string(j));
  table.columns.push_back("y");
  std::vector<double> x(std::size_t(task.dimension));
  char buf[32];
  for (Index i = 0; i < n; ++i) {
    for (auto& v : x) v = u(rng);
    const double y = task.mean(x) + task.scale(x) * noise(rng);
    std::vector<std::string> cells;
    for (double v : x) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      cells.emplace_back(buf);
    }
    std::snprintf(buf, sizeof buf, "%.17g", y);
    cells.emplace_back(buf);
    table.rows.push_back(std::move(cells));
  }
  return table;
}

SplitDataset generate(const SyntheticTask& task, Index n, std::uint64_t seed) {
  if (n < 10) throw DomainError("generate: need at least 10 rows");
  Rng rng = make_stream(seed, "synthetic/" + task.name);
  const Table table = synthesize(task, n, rng);
  IngestOptions options;
  options.seed = seed;
  return ingest_table(table, task.name, "y", options, "synthetic:" + task.name);
}

double true_quantile(const SyntheticTask& task, std::span<const double> x, double q) {
  return task.mean(x) + task.scale(x) * normal_quantile(q);
}

double true_crps(const SyntheticTask& task, std::span<const double> x) {
  return task.scale(x) / std::sqrt(std::numbers::pi);
}

double true_quantile(const SyntheticTask& task, const DatasetMeta& meta,
                     std::span<const double> x, double q) {
  return meta.normalize(true_quantile(task, x, q));
}

double true_scale(const SyntheticTask& task, const DatasetMeta& meta, std::span<const double> x) {
  return task.scale(x) * 10.0 / (meta.y_max - meta.y_min);
}

double true_crps(const SyntheticTask& task, const DatasetMeta& meta, std::span<const double> x) {
  return true_scale(task, meta, x) / std::sqrt(std::numbers::pi);
}

std::vector<double> task_inputs(const FeatureRow& row, const DatasetMeta& meta) {
  std::vector<double> x(meta.columns.size());
  std::vector<bool> seen(x.size(), false);
  for (Index i = 0; i < row.size(); ++i) {
    const auto id = row.feature_ids[std::size_t(i)];
    std::size_t c = std::size_t(id);
    if (!meta.feature_ids.empty()) {
      auto it = std::find(meta.feature_ids.begin(), meta.feature_ids.end(), id);
      if (it == meta.feature_ids.end()) throw DataError("task_inputs: foreign feature ID");
      c = std::size_t(it - meta.feature_ids.begin());
    }
    if (c >= x.size()) throw DataError("task_inputs: feature outside the dataset");
    x[c] = row.values[std::size_t(i)];
    seen[c] = true;
  }
  for (bool s : seen) {
    if (!s) throw DataError("task_inputs: row is missing a feature");
  }
  return x;
}

}  // namespace niaque
