// Copyright 2026 The niaque Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "niaque/param_store.hpp"
#include "niaque/random.hpp"
#include "niaque/tape.hpp"
#include "niaque/tensor.hpp"

namespace niaque {

struct NiaqueConfig {
  int blocks = 4;                 // R
  int layers_per_block = 2;       // L
  int latent_dim = 1024;          // E
  int input_embed_dim = 64;       // E_in; the last slot carries the value
  int hidden_width = 0;           // W of inner MLP layers; 0 means E
  int feature_vocab_capacity = 4096;
  double single_feature_ratio = 0.05;
  double feature_dropout_rate = 0.2;

  int width() const { return hidden_width > 0 ? hidden_width : latent_dim; }
  /// Throws std::invalid_argument describing the first violated constraint.
  void validate() const;

  friend bool operator==(const NiaqueConfig&, const NiaqueConfig&) = default;
};

/// One observation: (feature ID, raw value) pairs and an optional target.
struct FeatureRow {
  std::vector<std::int64_t> feature_ids;
  std::vector<double> values;
  std::optional<double> target;

  Index size() const { return Index(feature_ids.size()); }
  /// Checks d >= 1, matching lengths, unique IDs and finite values.
  void validate() const;

  friend bool operator==(const FeatureRow&, const FeatureRow&) = default;
};

/// Sign-preserving log compression log(|x| + 1) * sign(x).
double log_transform(double value);

/// A batch of rows in compressed form: the features of row r occupy
/// positions [offsets[r], offsets[r+1]).
struct FeatureBatch {
  std::vector<Index> offsets{0};
  std::vector<Index> ids;
  std::vector<double> values;
  /// Row index of every feature position.
  std::vector<Index> segment;

  Index rows() const { return Index(offsets.size()) - 1; }
  Index features() const { return Index(ids.size()); }

  /// Validates each row and its IDs against `vocab_capacity`.
  static FeatureBatch from_rows(std::span<const FeatureRow> rows,
                                Index vocab_capacity);
};

/// Flat list of (row, quantile level) pairs to decode.
struct QuantileQuery {
  std::vector<Index> row;
  std::vector<double> level;

  Index size() const { return Index(level.size()); }
  /// The same levels for each of `rows` rows, row-major.
  static QuantileQuery shared(Index rows, std::span<const double> levels);
  /// Row r uses levels(r, :) of a rows x Q tensor.
  static QuantileQuery per_row(const Tensor& levels);
};

/// Predicted quantiles per row. `quantiles` is [Q] for a shared request or
/// [batch x Q] when every row asked for its own levels; `values` is always
/// [batch x Q] and column-aligned with the request.
struct QuantileBatchPrediction {
  Tensor quantiles;
  Tensor values;
};

/// Parameter names and shapes in store order; a pure function of config.
std::vector<std::pair<std::string, Shape>> parameter_layout(const NiaqueConfig& config);

class NiaqueModel {
 public:
  /// Builds and initializes all parameters from `init_rng`.
  NiaqueModel(NiaqueConfig config, Rng& init_rng);
  /// Builds the parameter layout filled with zeros.
  explicit NiaqueModel(NiaqueConfig config);

  const NiaqueConfig& config() const { return config_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  /// Redraws embedding rows [first, last) from the initial distribution.
  void reinitialize_embeddings(Index first, Index last, Rng& rng);

 private:
  NiaqueConfig config_;
  ParamStore params_;
};

/// Model parameters bound to a tape, plus the forward equations.
class ModelGraph {
 public:
  /// Training-mode tapes route gradients into `model.params()`.
  ModelGraph(Tape& tape, NiaqueModel& model);
  /// Read-only binding; the tape must be in inference mode.
  ModelGraph(Tape& tape, const NiaqueModel& model);

  /// [sum d x E_in]: ID embedding concatenated with the log-transformed value.
  Var embed(const FeatureBatch& batch) const;
  /// [rows x E] observation embeddings p_R.
  Var encode(const Var& embedded, std::span<const Index> offsets) const;
  /// [query size x 1] predictions for each (row, level) pair.
  Var decode(const Var& observation, const QuantileQuery& query) const;

  Var forward(const FeatureBatch& batch, const QuantileQuery& query) const {
    return decode(encode(embed(batch), batch.offsets), query);
  }

 private:
  struct Dense {
    Var weight;
    Var bias;
  };
  struct EncoderBlock {
    std::vector<Dense> layers;
    Var skip;
    Var proj;
  };
  struct DecoderBlock {
    std::vector<Dense> layers;
    Dense film;
    Var skip;
    Var proj;
  };

  void bind(Tape& tape, const std::function<Var(const std::string&)>& param);

  const NiaqueConfig* config_;
  Tape* tape_;
  Var embedding_;
  std::vector<EncoderBlock> encoder_;
  std::vector<DecoderBlock> decoder_;
  Dense output_;
};

/// d x E_in input block of a single row.
Tensor embed_inputs(const FeatureRow& row, const NiaqueModel& model);
/// Observation embedding [E] of one embedded row.
Tensor encode(const Tensor& embedded, const NiaqueModel& model);
/// Predicted value per requested level for one observation embedding.
std::vector<double> decode(const Tensor& observation, std::span<const double> quantiles,
                           const NiaqueModel& model);

/// Inference over a batch with one shared quantile vector.
QuantileBatchPrediction forward(const NiaqueModel& model, std::span<const FeatureRow> rows,
                                std::span<const double> quantiles);
/// Inference with per-row quantile levels ([rows x Q]).
QuantileBatchPrediction forward(const NiaqueModel& model, std::span<const FeatureRow> rows,
                                const Tensor& quantiles_per_row);

}  // namespace niaque
