// Copyright 2026 The niaque Authors.
// SPDX-License-Identifier: Apache-2.0

#include "niaque/trainer.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "niaque/errors.hpp"
#include "niaque/kernels.hpp"
#include "niaque/optim.hpp"
#include "niaque/tape.hpp"

namespace niaque {

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("train config: " + m); };
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (!(lr > 0) || !std::isfinite(lr)) fail("lr must be positive");
  if (!(lr_drop_factor > 0)) fail("lr_drop_factor must be positive");
  for (std::size_t i = 0; i < lr_drop_points.size(); ++i) {
    if (lr_drop_points[i] < 1) fail("lr_drop_points must be positive");
    if (i > 0 && lr_drop_points[i] <= lr_drop_points[i - 1]) {
      fail("lr_drop_points must be strictly increasing");
    }
  }
  if (total_batches < 0) fail("total_batches must be >= 0");
  if (quantiles_per_sample < 1) fail("quantiles_per_sample must be >= 1");
  if (!(data_fraction > 0 && data_fraction <= 1)) fail("data_fraction must lie in (0, 1]");
  if (validation_interval < 1) fail("validation_interval must be >= 1");
  if (validation_rows < 1) fail("validation_rows must be >= 1");
  if (!(finetune_lr_scale > 0)) fail("finetune_lr_scale must be positive");
}

double learning_rate(const TrainConfig& config, Index completed) {
  double lr = config.lr;
  for (Index point : config.lr_drop_points) {
    if (completed >= point) lr /= config.lr_drop_factor;
  }
  return lr;
}

namespace {

nlohmann::json config_json(const NiaqueConfig& c) {
  return {{"blocks", c.blocks},
          {"layers_per_block", c.layers_per_block},
          {"latent_dim", c.latent_dim},
          {"input_embed_dim", c.input_embed_dim},
          {"hidden_width", c.hidden_width},
          {"feature_vocab_capacity", c.feature_vocab_capacity},
          {"single_feature_ratio", c.single_feature_ratio},
          {"feature_dropout_rate", c.feature_dropout_rate}};
}

NiaqueConfig config_from_json(const nlohmann::json& j) {
  NiaqueConfig c;
  c.blocks = j.at("blocks").get<int>();
  c.layers_per_block = j.at("layers_per_block").get<int>();
  c.latent_dim = j.at("latent_dim").get<int>();
  c.input_embed_dim = j.at("input_embed_dim").get<int>();
  c.hidden_width = j.at("hidden_width").get<int>();
  c.feature_vocab_capacity = j.at("feature_vocab_capacity").get<int>();
  c.single_feature_ratio = j.at("single_feature_ratio").get<double>();
  c.feature_dropout_rate = j.at("feature_dropout_rate").get<double>();
  return c;
}

}  // namespace

Container Checkpoint::to_container() const {
  Container c;
  auto& m = c.meta();
  m["kind"] = "checkpoint";
  m["config"] = config_json(model.config());
  m["registry"] = registry.to_json();
  m["datasets"] = nlohmann::json::array();
  for (const auto& d : datasets) m["datasets"].push_back(d.to_json());
  m["rng"] = {{"data", rng_state(rngs.data)},
              {"init", rng_state(rngs.init)},
              {"dropout", rng_state(rngs.dropout)},
              {"quantiles", rng_state(rngs.quantiles)}};
  m["batch"] = batch;
  m["step_count"] = model.params().step_count;
  if (std::isfinite(val_pinball)) m["val_pinball"] = val_pinball;

  for (const auto& p : model.params()) {
    std::vector<double> residual(std::size_t(p.value.size()));
    for (Index i = 0; i < p.value.size(); ++i) {
      const double v = p.value[i];
      if (std::abs(v) > double(FLT_MAX)) {
        throw FormatError("checkpoint: parameter '" + p.name + "' exceeds 32-bit range");
      }
      residual[std::size_t(i)] = v - double(float(v));
    }
    c.put_f32("param/" + p.name, p.value.shape(), p.value.values());
    c.put_f64("param_residual/" + p.name, p.value.shape(), residual);
    c.put_f64("adam_m/" + p.name, p.first_moment);
    c.put_f64("adam_v/" + p.name, p.second_moment);
  }
  return c;
}

Checkpoint Checkpoint::from_container(const Container& c) {
  const auto& m = c.meta();
  if (m.value("kind", "") != "checkpoint") throw FormatError("container is not a checkpoint");
  try {
    Checkpoint out{NiaqueModel(config_from_json(m.at("config"))),
                   FeatureRegistry::from_json(m.at("registry")),
                   {},
                   RngStreams::from_seed(0),
                   m.at("batch").get<Index>(),
                   m.value("val_pinball", std::numeric_limits<double>::quiet_NaN())};
    for (const auto& d : m.at("datasets")) out.datasets.push_back(DatasetMeta::from_json(d));
    restore_rng(out.rngs.data, m.at("rng").at("data").get<std::string>());
    restore_rng(out.rngs.init, m.at("rng").at("init").get<std::string>());
    restore_rng(out.rngs.dropout, m.at("rng").at("dropout").get<std::string>());
    restore_rng(out.rngs.quantiles, m.at("rng").at("quantiles").get<std::string>());
    out.model.params().step_count = m.at("step_count").get<std::uint64_t>();
    for (auto& p : out.model.params()) {
      const Tensor hi = c.tensor("param/" + p.name);
      const Tensor lo = c.tensor("param_residual/" + p.name);
      if (hi.shape() != p.value.shape() || lo.shape() != p.value.shape()) {
        throw FormatError("checkpoint: parameter '" + p.name + "' has shape " +
                          shape_string(hi.shape()) + ", expected " +
                          shape_string(p.value.shape()));
      }
      for (Index i = 0; i < hi.size(); ++i) p.value[i] = hi[i] + lo[i];
      p.first_moment = c.tensor("adam_m/" + p.name);
      p.second_moment = c.tensor("adam_v/" + p.name);
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  }
}

void Checkpoint::save(const std::filesystem::path& path) const { to_container().save(path); }

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  return from_container(Container::load(path));
}

const DatasetMeta& Checkpoint::dataset(const std::string& name) const {
  for (const auto& d : datasets) {
    if (d.name == name) return d;
  }
  throw DataError("dataset '" + name + "' is not known to the checkpoint");
}

Checkpoint initial_checkpoint(const NiaqueConfig& model_config, const FeatureRegistry& registry,
                              std::vector<DatasetMeta> datasets, std::uint64_t seed) {
  if (registry.next_id() > model_config.feature_vocab_capacity) {
    throw CapacityError("registry holds " + std::to_string(registry.next_id()) +
                        " features but the vocabulary capacity is " +
                        std::to_string(model_config.feature_vocab_capacity));
  }
  RngStreams rngs = RngStreams::from_seed(seed);
  NiaqueModel model(model_config, rngs.init);
  return Checkpoint{std::move(model), registry, std::move(datasets), std::move(rngs), 0,
                    std::numeric_limits<double>::quiet_NaN()};
}

double train_step(NiaqueModel& model, std::span<const FeatureRow> batch,
                  const TrainConfig& config, double lr, RngStreams& rngs) {
  if (batch.empty()) throw DataError("train_step: empty batch");
  const NiaqueConfig& mc = model.config();
  std::vector<FeatureRow> rows =
      single_feature_augment(batch, mc.single_feature_ratio, rngs.dropout);
  rows = feature_dropout(rows, mc.feature_dropout_rate, rngs.dropout);

  const Index k = config.quantiles_per_sample;
  Tensor levels(Shape{Index(rows.size()), k});
  std::vector<double> targets;
  targets.reserve(std::size_t(levels.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (!rows[r].target) throw DataError("train_step: row without a target");
    for (Index j = 0; j < k; ++j) {
      levels(Index(r), j) = uniform_open(rngs.quantiles);
      targets.push_back(*rows[r].target);
    }
  }

  model.params().zero_grad();
  Tape tape;
  ModelGraph graph(tape, model);
  const FeatureBatch fb = FeatureBatch::from_rows(rows, mc.feature_vocab_capacity);
  Var loss;
  try {
    Var pred = graph.forward(fb, QuantileQuery::per_row(levels));
    loss = pinball_loss(pred, targets, levels.values());
  } catch (const NonFiniteError& e) {
    throw NonFiniteError(std::string("train_step: forward pass diverged (") + e.what() +
                         "); lower the learning rate");
  }
  tape.backward(loss);
  adam_step(model.params(), lr);
  return loss.value()[0];
}

double validation_pinball(const NiaqueModel& model, std::span<const FeatureRow> rows,
                          std::uint64_t seed) {
  if (rows.empty()) throw DataError("validation_pinball: no rows");
  Rng rng = make_stream(seed, "validation-quantiles");
  Tensor levels(Shape{Index(rows.size()), 1});
  for (Index r = 0; r < levels.rows(); ++r) levels[r] = uniform_open(rng);
  const auto pred = forward(model, rows, levels);
  std::vector<double> terms(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (!rows[r].target) throw DataError("validation_pinball: row without a target");
    terms[r] = pinball(*rows[r].target, pred.values[Index(r)], levels[Index(r)]);
  }
  return kernels::canonical_sum(terms) / double(rows.size());
}

std::string TrainEvent::to_line() const {
  char buf[160];
  std::snprintf(buf, sizeof buf, "batch=%lld lr=%.6g train_pinball=%.6g val_pinball=%.6g",
                static_cast<long long>(batch), lr, train_pinball, val_pinball);
  return buf;
}

namespace {

std::vector<FeatureRow> strided(std::vector<FeatureRow> rows, Index cap) {
  const auto n = rows.size();
  if (Index(n) <= cap) return rows;
  std::vector<FeatureRow> out;
  out.reserve(std::size_t(cap));
  for (Index i = 0; i < cap; ++i) out.push_back(rows[std::size_t(i) * n / std::size_t(cap)]);
  return out;
}

std::vector<FeatureRow> validation_rows(std::span<const SplitDataset> datasets, Index cap) {
  std::vector<FeatureRow> rows;
  for (const auto& d : datasets) rows.insert(rows.end(), d.val.begin(), d.val.end());
  if (rows.empty()) {
    for (const auto& d : datasets) rows.insert(rows.end(), d.train.begin(), d.train.end());
  }
  return strided(std::move(rows), cap);
}

}  // namespace

TrainResult train(Checkpoint start, std::span<const SplitDataset> datasets,
                  const TrainConfig& config, double lr_scale, std::ostream* log) {
  config.validate();
  if (datasets.empty()) throw DataError("train: no datasets");
  for (const auto& d : datasets) {
    if (!d.bound()) throw DataError("train: dataset '" + d.meta.name + "' is not registered");
  }
  const auto val = validation_rows(datasets, config.validation_rows);

  TrainResult result{start, std::move(start), {}, {}};
  Checkpoint& state = result.final;
  double best = std::numeric_limits<double>::infinity();
  double window = 0;
  Index window_size = 0;
  while (state.batch < config.total_batches) {
    const double lr = learning_rate(config, state.batch) * lr_scale;
    const auto batch = sample_batch(datasets, config.batch_size, state.rngs.data);
    double loss;
    try {
      loss = train_step(state.model, batch, config, lr, state.rngs);
    } catch (const NonFiniteError& e) {
      throw NonFiniteError("batch " + std::to_string(state.batch + 1) + ": " + e.what());
    }
    state.batch += 1;
    result.losses.push_back(loss);
    window += loss;
    window_size += 1;
    if (state.batch % config.validation_interval == 0 || state.batch == config.total_batches) {
      TrainEvent event{state.batch, lr, window / double(window_size),
                       validation_pinball(state.model, val, config.seed)};
      window = 0;
      window_size = 0;
      state.val_pinball = event.val_pinball;
      if (log) *log << event.to_line() << '\n' << std::flush;
      result.events.push_back(event);
      if (event.val_pinball < best) {
        best = event.val_pinball;
        result.best = state;
      }
    }
  }
  return result;
}

std::vector<SplitDataset> training_subsample(std::span<const SplitDataset> datasets,
                                             const TrainConfig& config) {
  std::vector<SplitDataset> out;
  for (const auto& d : datasets) {
    Rng rng = make_stream(config.seed, "subsample/" + d.meta.name);
    out.push_back(subsample_train(d, config.data_fraction, rng));
  }
  return out;
}

TrainResult pretrain(std::span<const SplitDataset> datasets, const FeatureRegistry& registry,
                     const NiaqueConfig& model_config, const TrainConfig& config,
                     std::ostream* log) {
  config.validate();
  std::vector<DatasetMeta> metas;
  for (const auto& d : datasets) metas.push_back(d.meta);
  Checkpoint start = initial_checkpoint(model_config, registry, std::move(metas), config.seed);
  const auto subsample = training_subsample(datasets, config);
  return train(std::move(start), subsample, config, 1.0, log);
}

TrainResult finetune(const Checkpoint& checkpoint, std::span<SplitDataset> datasets,
                     const TrainConfig& config, std::ostream* log) {
  config.validate();
  Checkpoint start = checkpoint;
  const Index before = start.registry.next_id();
  for (auto& d : datasets) bind_features(d, start.registry);
  const Index after = start.registry.next_id();
  const Index capacity = start.model.config().feature_vocab_capacity;
  if (after > capacity) {
    throw CapacityError("fine-tuning needs " + std::to_string(after) +
                        " feature IDs but the model's vocabulary capacity is " +
                        std::to_string(capacity) + "; resize required");
  }
  start.rngs = RngStreams::from_seed(config.seed);
  if (after > before) start.model.reinitialize_embeddings(before, after, start.rngs.init);
  for (auto& p : start.model.params()) {
    p.first_moment.set_zero();
    p.second_moment.set_zero();
    p.grad.set_zero();
  }
  start.model.params().step_count = 0;
  start.batch = 0;
  start.val_pinball = std::numeric_limits<double>::quiet_NaN();
  for (const auto& d : datasets) {
    auto it = std::find_if(start.datasets.begin(), start.datasets.end(),
                           [&](const DatasetMeta& m) { return m.name == d.meta.name; });
    if (it != start.datasets.end()) {
      *it = d.meta;
    } else {
      start.datasets.push_back(d.meta);
    }
  }
  const auto subsample = training_subsample(datasets, config);
  return train(std::move(start), subsample, config, config.finetune_lr_scale, log);
}

namespace {

struct Scored {
  std::vector<double> y;
  std::vector<double> block;  // row-major S x Q
  std::vector<double> median;
  std::vector<std::vector<double>> low, high;  // per coverage level
};

MetricReport score(const Scored& s, std::span<const double> levels,
                   std::span<const double> coverage_levels) {
  const Index rows = Index(s.y.size());
  const Tensor block(Shape{rows, Index(levels.size())}, s.block);
  MetricReport r;
  r.crps = crps_sample(s.y, block, levels);
  const PointMetrics pm = point_metrics(s.y, s.median);
  // Targets live on [0, 10]; the log error is taken on predictions clipped
  // to that range's lower end.
  std::vector<double> clipped(s.median.size());
  for (std::size_t i = 0; i < clipped.size(); ++i) clipped[i] = std::max(s.median[i], 0.0);
  r.smape = pm.smape;
  r.aad = pm.aad;
  r.bias = pm.bias;
  r.rmse = pm.rmse;
  r.rmsle = point_metrics(s.y, clipped).rmsle;
  for (std::size_t c = 0; c < coverage_levels.size(); ++c) {
    r.coverage_at[coverage_levels[c]] = coverage(s.y, s.low[c], s.high[c]);
  }
  return r;
}

}  // namespace

Evaluation evaluate(const NiaqueModel& model, std::span<const SplitDataset> datasets,
                    const EvaluationOptions& options) {
  if (options.quantile_count < 1) throw DomainError("evaluate: need at least one quantile");
  const auto levels = evaluation_quantiles(options.quantile_count, options.quantile_seed);
  const std::size_t q = levels.size();
  const std::size_t nc = options.coverage_levels.size();
  std::vector<double> request = levels;
  request.push_back(0.5);
  for (double c : options.coverage_levels) {
    if (!(c > 0 && c < 1)) throw DomainError("evaluate: coverage level must lie in (0, 1)");
    request.push_back((1 - c) / 2);
    request.push_back((1 + c) / 2);
  }

  Evaluation out;
  out.quantile_count = options.quantile_count;
  out.quantile_seed = options.quantile_seed;
  Scored pooled;
  pooled.low.resize(nc);
  pooled.high.resize(nc);
  for (const auto& d : datasets) {
    const auto& rows = d.split(options.split);
    if (rows.empty()) continue;
    const auto pred = forward(model, rows, request);
    Scored s;
    s.low.resize(nc);
    s.high.resize(nc);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (!rows[r].target) throw DataError("evaluate: row without a target");
      s.y.push_back(*rows[r].target);
      const double* p = pred.values.data() + r * request.size();
      s.block.insert(s.block.end(), p, p + q);
      s.median.push_back(p[q]);
      for (std::size_t c = 0; c < nc; ++c) {
        s.low[c].push_back(p[q + 1 + 2 * c]);
        s.high[c].push_back(p[q + 2 + 2 * c]);
      }
    }
    out.per_dataset.emplace_back(d.meta.name, score(s, levels, options.coverage_levels));
    auto append = [](std::vector<double>& a, const std::vector<double>& b) {
      a.insert(a.end(), b.begin(), b.end());
    };
    append(pooled.y, s.y);
    append(pooled.block, s.block);
    append(pooled.median, s.median);
    for (std::size_t c = 0; c < nc; ++c) {
      append(pooled.low[c], s.low[c]);
      append(pooled.high[c], s.high[c]);
    }
  }
  if (out.per_dataset.empty()) throw DataError("evaluate: the requested split is empty");
  out.micro = score(pooled, levels, options.coverage_levels);

  const double n = double(out.per_dataset.size());
  for (const auto& [name, r] : out.per_dataset) {
    out.macro.smape += r.smape / n;
    out.macro.aad += r.aad / n;
    out.macro.bias += r.bias / n;
    out.macro.rmse += r.rmse / n;
    out.macro.rmsle += r.rmsle / n;
    out.macro.crps += r.crps / n;
    for (const auto& [level, value] : r.coverage_at) out.macro.coverage_at[level] += value / n;
  }
  return out;
}

std::string Evaluation::to_text() const {
  std::string out = "quantile_count=" + std::to_string(quantile_count) + "\n" +
                    "quantile_seed=" + std::to_string(quantile_seed) + "\n";
  out += micro.to_text();
  out += micro.to_text("micro_");
  out += macro.to_text("macro_");
  for (const auto& [name, r] : per_dataset) out += r.to_text(name + ".");
  return out;
}

}  // namespace niaque
