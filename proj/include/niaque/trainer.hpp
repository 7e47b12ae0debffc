// Copyright 2026 The niaque Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "niaque/container.hpp"
#include "niaque/data.hpp"
#include "niaque/metrics.hpp"
#include "niaque/model.hpp"
#include "niaque/random.hpp"

namespace niaque {

struct TrainConfig {
  Index batch_size = 512;
  double lr = 1e-4;
  /// Batch counts at which the rate is divided by lr_drop_factor.
  std::vector<Index> lr_drop_points;
  double lr_drop_factor = 10;
  Index total_batches = 1000;
  std::uint64_t seed = 0;
  int quantiles_per_sample = 1;
  /// Fraction of each train split used (seeded subsample).
  double data_fraction = 1.0;
  Index validation_interval = 100;
  /// Upper bound on the validation rows scored per event.
  Index validation_rows = 2048;
  /// Multiplier on `lr` while fine-tuning.
  double finetune_lr_scale = 0.1;

  /// Throws std::invalid_argument describing the first violated constraint.
  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Rate used for the step that follows `completed` finished batches.
double learning_rate(const TrainConfig& config, Index completed);

/// Everything needed to resume or deploy a model.
struct Checkpoint {
  NiaqueModel model;
  FeatureRegistry registry;
  std::vector<DatasetMeta> datasets;
  RngStreams rngs;
  /// Completed batches.
  Index batch = 0;
  double val_pinball = std::numeric_limits<double>::quiet_NaN();

  /// Parameters are stored as 32-bit values plus a 64-bit remainder so the
  /// restored doubles are bit-identical; optimizer moments are 64-bit.
  Container to_container() const;
  static Checkpoint from_container(const Container& c);
  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

  /// Metadata of a registered dataset; throws DataError if absent.
  const DatasetMeta& dataset(const std::string& name) const;
};

/// Fresh checkpoint: model initialized from the seed's init stream.
Checkpoint initial_checkpoint(const NiaqueConfig& model_config, const FeatureRegistry& registry,
                              std::vector<DatasetMeta> datasets, std::uint64_t seed);

/// One optimization step: augmentation and dropout, K random levels per
/// row, mean pinball over all (row, level) pairs, one Adam step at `lr`.
/// Returns the loss before the update.
double train_step(NiaqueModel& model, std::span<const FeatureRow> batch,
                  const TrainConfig& config, double lr, RngStreams& rngs);

/// Mean pinball on `rows` with one level per row drawn from `seed`.
double validation_pinball(const NiaqueModel& model, std::span<const FeatureRow> rows,
                          std::uint64_t seed);

struct TrainEvent {
  Index batch = 0;
  double lr = 0;
  double train_pinball = 0;
  double val_pinball = 0;

  /// `batch=<k> lr=<lr> train_pinball=<v> val_pinball=<v>`
  std::string to_line() const;
};

struct TrainResult {
  Checkpoint final;
  Checkpoint best;
  std::vector<TrainEvent> events;
  /// Loss of every step, in order.
  std::vector<double> losses;
};

/// Continues `start` on the train splits of `datasets` until
/// config.total_batches, validating every config.validation_interval batches.
/// The rate is learning_rate(config, k) * lr_scale. Events are written to
/// `log` as they happen.
TrainResult train(Checkpoint start, std::span<const SplitDataset> datasets,
                  const TrainConfig& config, double lr_scale = 1.0,
                  std::ostream* log = nullptr);

/// Joint training from scratch on bound datasets (each subsampled to
/// config.data_fraction).
TrainResult pretrain(std::span<const SplitDataset> datasets, const FeatureRegistry& registry,
                     const NiaqueConfig& model_config, const TrainConfig& config,
                     std::ostream* log = nullptr);

/// Registers the new datasets' columns, draws fresh embedding rows for new
/// IDs, resets optimizer state and trains on the config.data_fraction
/// subsample at lr * finetune_lr_scale. The datasets are bound in place.
/// Throws CapacityError when the vocabulary would outgrow the model.
TrainResult finetune(const Checkpoint& checkpoint, std::span<SplitDataset> datasets,
                     const TrainConfig& config, std::ostream* log = nullptr);

/// Seeded data_fraction subsample of every train split.
std::vector<SplitDataset> training_subsample(std::span<const SplitDataset> datasets,
                                             const TrainConfig& config);

struct EvaluationOptions {
  Split split = Split::test;
  int quantile_count = 200;
  std::uint64_t quantile_seed = kEvaluationQuantileSeed;
  std::vector<double> coverage_levels{0.95};
};

struct Evaluation {
  /// Pooled over all rows of all datasets.
  MetricReport micro;
  /// Mean of the per-dataset reports.
  MetricReport macro;
  std::vector<std::pair<std::string, MetricReport>> per_dataset;
  int quantile_count = 0;
  std::uint64_t quantile_seed = 0;

  /// Unprefixed keys carry the pooled values; `micro_`, `macro_` and
  /// `<dataset>.` prefixed blocks follow.
  std::string to_text() const;
};

/// Metrics on the normalized target scale: CRPS over the seeded evaluation
/// levels, point metrics of the median and interval coverage.
Evaluation evaluate(const NiaqueModel& model, std::span<const SplitDataset> datasets,
                    const EvaluationOptions& options = {});

}  // namespace niaque
