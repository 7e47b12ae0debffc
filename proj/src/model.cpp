// Copyright 2026 The niaque Authors.
// SPDX-License-Identifier: Apache-2.0

#include "niaque/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

#include "niaque/errors.hpp"

namespace niaque {

namespace {

std::string block_name(const char* part, int block) {
  return std::string(part) + "." + std::to_string(block + 1);
}

std::string layer_name(const char* part, int block, int layer) {
  return block_name(part, block) + ".fc" + std::to_string(layer + 1);
}

// Output width of layer `layer` in a block: hidden width W inside the MLP,
// latent width E at the last layer so the residual and projections line up.
Index layer_out(const NiaqueConfig& c, int layer) {
  return layer + 1 == c.layers_per_block ? c.latent_dim : c.width();
}

Index layer_in(const NiaqueConfig& c, int layer, Index block_in) {
  return layer == 0 ? block_in : c.width();
}

bool is_film(const std::string& name) { return name.find(".film.") != std::string::npos; }
bool is_bias(const std::string& name) { return name.ends_with(".bias"); }

}  // namespace

void NiaqueConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("NiaqueConfig: ") + what);
  };
  require(blocks >= 1, "blocks must be >= 1");
  require(layers_per_block >= 1, "layers_per_block must be >= 1");
  require(latent_dim >= 1, "latent_dim must be >= 1");
  require(input_embed_dim >= 2, "input_embed_dim must be >= 2");
  require(hidden_width >= 0, "hidden_width must be >= 0");
  require(feature_vocab_capacity >= 1, "feature_vocab_capacity must be >= 1");
  require(single_feature_ratio >= 0 && single_feature_ratio < 1,
          "single_feature_ratio must be in [0, 1)");
  require(feature_dropout_rate >= 0 && feature_dropout_rate < 1,
          "feature_dropout_rate must be in [0, 1)");
}

void FeatureRow::validate() const {
  if (feature_ids.empty()) throw DataError("feature row has no features");
  if (feature_ids.size() != values.size()) {
    throw DataError("feature row: " + std::to_string(feature_ids.size()) + " ids vs " +
                    std::to_string(values.size()) + " values");
  }
  std::set<std::int64_t> seen;
  for (std::size_t i = 0; i < feature_ids.size(); ++i) {
    if (feature_ids[i] < 0) throw VocabularyError("negative feature id");
    if (!seen.insert(feature_ids[i]).second) {
      throw DataError("feature row: duplicate feature id " +
                      std::to_string(feature_ids[i]));
    }
    if (!std::isfinite(values[i])) {
      throw NonFiniteError("feature row: non-finite value for feature " +
                           std::to_string(feature_ids[i]));
    }
  }
  if (target && !std::isfinite(*target)) throw NonFiniteError("feature row: non-finite target");
}

double log_transform(double value) {
  if (!std::isfinite(value)) throw NonFiniteError("log_transform: non-finite input");
  return std::copysign(std::log1p(std::abs(value)), value);
}

FeatureBatch FeatureBatch::from_rows(std::span<const FeatureRow> rows, Index vocab_capacity) {
  if (rows.empty()) throw DataError("empty batch");
  FeatureBatch batch;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const FeatureRow& row = rows[r];
    row.validate();
    for (std::size_t i = 0; i < row.feature_ids.size(); ++i) {
      if (row.feature_ids[i] >= vocab_capacity) {
        throw VocabularyError("feature id " + std::to_string(row.feature_ids[i]) +
                              " outside vocabulary of " + std::to_string(vocab_capacity));
      }
      batch.ids.push_back(Index(row.feature_ids[i]));
      batch.values.push_back(row.values[i]);
      batch.segment.push_back(Index(r));
    }
    batch.offsets.push_back(Index(batch.ids.size()));
  }
  return batch;
}

QuantileQuery QuantileQuery::shared(Index rows, std::span<const double> levels) {
  QuantileQuery q;
  for (Index r = 0; r < rows; ++r) {
    for (double level : levels) {
      q.row.push_back(r);
      q.level.push_back(level);
    }
  }
  return q;
}

QuantileQuery QuantileQuery::per_row(const Tensor& levels) {
  QuantileQuery q;
  for (Index r = 0; r < levels.rows(); ++r) {
    for (Index j = 0; j < levels.cols(); ++j) {
      q.row.push_back(r);
      q.level.push_back(levels(r, j));
    }
  }
  return q;
}

std::vector<std::pair<std::string, Shape>> parameter_layout(const NiaqueConfig& c) {
  c.validate();
  std::vector<std::pair<std::string, Shape>> layout;
  const Index E = c.latent_dim;
  layout.emplace_back("embedding", Shape{c.feature_vocab_capacity, c.input_embed_dim - 1});
  for (int r = 0; r < c.blocks; ++r) {
    const Index in = r == 0 ? c.input_embed_dim : E;
    for (int l = 0; l < c.layers_per_block; ++l) {
      const std::string name = layer_name("encoder", r, l);
      layout.emplace_back(name + ".weight", Shape{layer_in(c, l, in), layer_out(c, l)});
      layout.emplace_back(name + ".bias", Shape{layer_out(c, l)});
    }
    layout.emplace_back(block_name("encoder", r) + ".skip", Shape{in, E});
    layout.emplace_back(block_name("encoder", r) + ".proj", Shape{E, E});
  }
  for (int r = 0; r < c.blocks; ++r) {
    for (int l = 0; l < c.layers_per_block; ++l) {
      const std::string name = layer_name("decoder", r, l);
      layout.emplace_back(name + ".weight", Shape{layer_in(c, l, E), layer_out(c, l)});
      layout.emplace_back(name + ".bias", Shape{layer_out(c, l)});
    }
    const Index film_width = layer_out(c, 0);
    layout.emplace_back(block_name("decoder", r) + ".film.weight", Shape{1, 2 * film_width});
    layout.emplace_back(block_name("decoder", r) + ".film.bias", Shape{2 * film_width});
    layout.emplace_back(block_name("decoder", r) + ".skip", Shape{E, E});
    layout.emplace_back(block_name("decoder", r) + ".proj", Shape{E, E});
  }
  layout.emplace_back("output.weight", Shape{E, 1});
  layout.emplace_back("output.bias", Shape{1});
  return layout;
}

NiaqueModel::NiaqueModel(NiaqueConfig config) : config_(std::move(config)) {
  for (auto& [name, shape] : parameter_layout(config_)) params_.add(name, Tensor(shape));
}

NiaqueModel::NiaqueModel(NiaqueConfig config, Rng& init_rng)
    : NiaqueModel(std::move(config)) {
  for (auto& p : params_) {
    if (p.name == "embedding") {
      reinitialize_embeddings(0, p.value.rows(), init_rng);
    } else if (is_film(p.name) || is_bias(p.name)) {
      p.value.set_zero();
    } else {
      const double bound = 1.0 / std::sqrt(double(p.value.rows()));
      std::uniform_real_distribution<double> u(-bound, bound);
      for (double& v : p.value.values()) v = u(init_rng);
    }
  }
}

void NiaqueModel::reinitialize_embeddings(Index first, Index last, Rng& rng) {
  Tensor& table = params_.at("embedding").value;
  if (first < 0 || last > table.rows() || first > last) {
    throw CapacityError("embedding rows [" + std::to_string(first) + ", " +
                        std::to_string(last) + ") outside table of " +
                        std::to_string(table.rows()));
  }
  std::normal_distribution<double> normal(0.0, 0.02);
  for (Index r = first; r < last; ++r) {
    for (Index c = 0; c < table.cols(); ++c) table(r, c) = normal(rng);
  }
}

ModelGraph::ModelGraph(Tape& tape, NiaqueModel& model)
    : config_(&model.config()), tape_(&tape) {
  bind(tape, [&](const std::string& name) { return tape.parameter(model.params(), name); });
}

ModelGraph::ModelGraph(Tape& tape, const NiaqueModel& model)
    : config_(&model.config()), tape_(&tape) {
  if (tape.mode() != Tape::Mode::inference) {
    throw TapeError("read-only model binding requires an inference tape");
  }
  const ParamStore& store = model.params();
  bind(tape, [&](const std::string& name) { return tape.parameter(store, name); });
}

void ModelGraph::bind(Tape&, const std::function<Var(const std::string&)>& param) {
  const NiaqueConfig& c = *config_;
  embedding_ = param("embedding");
  auto dense = [&](const std::string& name) {
    return Dense{param(name + ".weight"), param(name + ".bias")};
  };
  for (int r = 0; r < c.blocks; ++r) {
    EncoderBlock block;
    for (int l = 0; l < c.layers_per_block; ++l) {
      block.layers.push_back(dense(layer_name("encoder", r, l)));
    }
    block.skip = param(block_name("encoder", r) + ".skip");
    block.proj = param(block_name("encoder", r) + ".proj");
    encoder_.push_back(std::move(block));
  }
  for (int r = 0; r < c.blocks; ++r) {
    DecoderBlock block;
    for (int l = 0; l < c.layers_per_block; ++l) {
      block.layers.push_back(dense(layer_name("decoder", r, l)));
    }
    block.film = dense(block_name("decoder", r) + ".film");
    block.skip = param(block_name("decoder", r) + ".skip");
    block.proj = param(block_name("decoder", r) + ".proj");
    decoder_.push_back(std::move(block));
  }
  output_ = dense("output");
}

Var ModelGraph::embed(const FeatureBatch& batch) const {
  const Index capacity = embedding_.value().rows();
  for (Index id : batch.ids) {
    if (id < 0 || id >= capacity) {
      throw VocabularyError("feature id " + std::to_string(id) + " outside vocabulary of " +
                            std::to_string(capacity));
    }
  }
  Tensor logs(Shape{batch.features(), 1});
  for (Index i = 0; i < batch.features(); ++i) logs[i] = log_transform(batch.values[std::size_t(i)]);
  return concat_cols(gather_rows(embedding_, batch.ids), tape_->constant(std::move(logs)));
}

Var ModelGraph::encode(const Var& embedded, std::span<const Index> offsets) const {
  std::vector<Index> offs(offsets.begin(), offsets.end());
  std::vector<Index> segment;
  for (std::size_t s = 0; s + 1 < offs.size(); ++s) {
    if (offs[s + 1] <= offs[s]) throw DimensionError("encode: row without features");
    segment.insert(segment.end(), std::size_t(offs[s + 1] - offs[s]), Index(s));
  }
  if (offs.size() < 2 || offs.back() != embedded.value().rows()) {
    throw DimensionError("encode: offsets do not match embedded rows");
  }
  if (embedded.value().cols() != config_->input_embed_dim) {
    throw DimensionError("encode: expected width " + std::to_string(config_->input_embed_dim) +
                         ", got " + shape_string(embedded.value().shape()));
  }

  Var b = embedded;
  Var p;
  for (std::size_t r = 0; r < encoder_.size(); ++r) {
    const EncoderBlock& block = encoder_[r];
    // Delta mode: from the second block on, features enter relative to the
    // running prototype, scaled by 1/(number of blocks already pooled).
    Var x = r == 0 ? embedded : relu(b - (1.0 / double(r)) * gather_rows(p, segment));
    Var h = x;
    for (const Dense& layer : block.layers) h = relu(linear(h, layer.weight, layer.bias));
    b = relu(matmul(x, block.skip) + h);
    Var pooled = segment_mean(matmul(h, block.proj), offs);
    p = r == 0 ? pooled : p + pooled;
  }
  return p;
}

Var ModelGraph::decode(const Var& observation, const QuantileQuery& query) const {
  if (query.size() == 0) throw DimensionError("decode: no quantiles requested");
  if (observation.value().cols() != config_->latent_dim) {
    throw DimensionError("decode: expected width " + std::to_string(config_->latent_dim) +
                         ", got " + shape_string(observation.value().shape()));
  }
  Tensor levels(Shape{query.size(), 1});
  for (Index i = 0; i < query.size(); ++i) {
    const double q = query.level[std::size_t(i)];
    if (!(q > 0.0 && q < 1.0)) {
      throw DomainError("decode: quantile level " + std::to_string(q) + " outside (0, 1)");
    }
    if (query.row[std::size_t(i)] < 0 || query.row[std::size_t(i)] >= observation.value().rows()) {
      throw DimensionError("decode: query row out of range");
    }
  }
  for (Index i = 0; i < query.size(); ++i) levels[i] = query.level[std::size_t(i)];
  const Var q = tape_->constant(std::move(levels));

  Var b = observation;
  Var running;
  for (std::size_t r = 0; r < decoder_.size(); ++r) {
    const DecoderBlock& block = decoder_[r];
    const Dense& first = block.layers.front();
    Var h = relu(linear(b, first.weight, first.bias));
    Var skip = matmul(b, block.skip);
    if (r == 0) {
      // The observation is shared by all levels of a row: run the first
      // layer once per row, then fan out to (row, level) pairs.
      h = gather_rows(h, query.row);
      skip = gather_rows(skip, query.row);
    }
    h = film(h, linear(q, block.film.weight, block.film.bias));
    for (std::size_t l = 1; l < block.layers.size(); ++l) {
      h = relu(linear(h, block.layers[l].weight, block.layers[l].bias));
    }
    b = relu(skip + h);
    Var step = matmul(h, block.proj);
    running = r == 0 ? step : running + step;
  }
  return linear(running, output_.weight, output_.bias);
}

Tensor embed_inputs(const FeatureRow& row, const NiaqueModel& model) {
  Tape tape(Tape::Mode::inference);
  ModelGraph graph(tape, model);
  const FeatureBatch batch =
      FeatureBatch::from_rows(std::span(&row, 1), model.config().feature_vocab_capacity);
  return graph.embed(batch).value();
}

Tensor encode(const Tensor& embedded, const NiaqueModel& model) {
  Tape tape(Tape::Mode::inference);
  ModelGraph graph(tape, model);
  const std::vector<Index> offsets{0, embedded.rows()};
  Var x = tape.constant(embedded.reshaped(Shape{embedded.rows(), embedded.cols()}));
  return graph.encode(x, offsets).value().reshaped(Shape{model.config().latent_dim});
}

std::vector<double> decode(const Tensor& observation, std::span<const double> quantiles,
                           const NiaqueModel& model) {
  Tape tape(Tape::Mode::inference);
  ModelGraph graph(tape, model);
  Var obs = tape.constant(observation.reshaped(Shape{1, observation.size()}));
  const Tensor out = graph.decode(obs, QuantileQuery::shared(1, quantiles)).value();
  return {out.values().begin(), out.values().end()};
}

namespace {

QuantileBatchPrediction run_forward(const NiaqueModel& model, std::span<const FeatureRow> rows,
                                    const QuantileQuery& query, Index levels_per_row) {
  // Rows are decoded in chunks to bound tape memory; kernels accumulate
  // row by row, so chunking does not change any output bit.
  constexpr Index kPairsPerChunk = 1 << 15;
  const Index n = Index(rows.size());
  const Index chunk = std::max<Index>(1, kPairsPerChunk / std::max<Index>(1, levels_per_row));
  if (n == 0) throw DimensionError("forward: empty batch");
  QuantileBatchPrediction pred;
  pred.values = Tensor(Shape{n, levels_per_row});
  for (Index first = 0; first < n; first += chunk) {
    const Index last = std::min(n, first + chunk);
    QuantileQuery part;
    for (Index k = first * levels_per_row; k < last * levels_per_row; ++k) {
      part.row.push_back(query.row[std::size_t(k)] - first);
      part.level.push_back(query.level[std::size_t(k)]);
    }
    Tape tape(Tape::Mode::inference);
    ModelGraph graph(tape, model);
    const FeatureBatch batch = FeatureBatch::from_rows(
        rows.subspan(std::size_t(first), std::size_t(last - first)),
        model.config().feature_vocab_capacity);
    const Tensor out = graph.forward(batch, part).value();
    std::copy(out.values().begin(), out.values().end(),
              pred.values.data() + first * levels_per_row);
  }
  return pred;
}

}  // namespace

QuantileBatchPrediction forward(const NiaqueModel& model, std::span<const FeatureRow> rows,
                                std::span<const double> quantiles) {
  if (quantiles.empty()) throw DimensionError("forward: no quantiles requested");
  auto pred = run_forward(model, rows, QuantileQuery::shared(Index(rows.size()), quantiles),
                          Index(quantiles.size()));
  pred.quantiles = Tensor::vector(quantiles);
  return pred;
}

QuantileBatchPrediction forward(const NiaqueModel& model, std::span<const FeatureRow> rows,
                                const Tensor& quantiles_per_row) {
  if (quantiles_per_row.rows() != Index(rows.size())) {
    throw DimensionError("forward: quantile matrix " + shape_string(quantiles_per_row.shape()) +
                         " for " + std::to_string(rows.size()) + " rows");
  }
  auto pred = run_forward(model, rows, QuantileQuery::per_row(quantiles_per_row),
                          quantiles_per_row.cols());
  pred.quantiles = quantiles_per_row;
  return pred;
}

}  // namespace niaque
