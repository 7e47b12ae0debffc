// Copyright 2026 The niaque Authors.
// SPDX-License-Identifier: Apache-2.0

#include "niaque/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace niaque {

GradientCheckReport check_gradients(ParamStore& params, const LossBuilder& loss,
                                    double step, double floor) {
  params.zero_grad();
  {
    Tape tape;
    tape.backward(loss(tape));
  }
  auto evaluate = [&] {
    Tape tape(Tape::Mode::inference);
    return loss(tape).value()[0];
  };

  GradientCheckReport report;
  for (auto& p : params) {
    for (Index i = 0; i < p.value.size(); ++i) {
      const double saved = p.value[i];
      p.value[i] = saved + step;
      const double up = evaluate();
      p.value[i] = saved - step;
      const double down = evaluate();
      p.value[i] = saved;
      const double numeric = (up - down) / (2 * step);
      const double analytic = p.grad[i];
      const double rel = std::abs(analytic - numeric) /
                         std::max({std::abs(analytic), std::abs(numeric), floor});
      ++report.checked;
      if (report.worst_index < 0 || rel > report.max_relative_error) {
        report.max_relative_error = rel;
        report.worst_parameter = p.name;
        report.worst_index = i;
        report.analytic = analytic;
        report.numeric = numeric;
      }
    }
  }
  params.zero_grad();
  return report;
}

NiaqueConfig random_tiny_config(Rng& rng) {
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  NiaqueConfig c;
  c.blocks = pick(1, 3);
  c.layers_per_block = pick(1, 2);
  c.latent_dim = pick(2, 16);
  c.input_embed_dim = pick(2, 6);
  c.hidden_width = pick(2, 16);
  c.feature_vocab_capacity = pick(6, 10);
  return c;
}

GradientCheckReport check_model_gradients(const NiaqueConfig& config, std::uint64_t seed,
                                          int max_features, int batch_rows) {
  Rng init = make_stream(seed, "gradcheck-init");
  NiaqueModel model(config, init);
  // Zero-initialized FiLM layers would leave their own input gradients
  // unexercised, so every tensor gets a random draw here.
  std::normal_distribution<double> normal(0.0, 0.5);
  for (auto& p : model.params()) {
    for (double& v : p.value.values()) v = normal(init);
  }

  Rng data = make_stream(seed, "gradcheck-data");
  std::uniform_real_distribution<double> value(-3.0, 3.0);
  std::vector<FeatureRow> rows;
  std::vector<double> targets, levels;
  std::vector<Index> query_rows;
  for (int r = 0; r < batch_rows; ++r) {
    const int d = std::uniform_int_distribution<int>(1, max_features)(data);
    std::vector<std::int64_t> ids(static_cast<std::size_t>(config.feature_vocab_capacity));
    std::iota(ids.begin(), ids.end(), 0);
    std::shuffle(ids.begin(), ids.end(), data);
    FeatureRow row;
    for (int i = 0; i < std::min<int>(d, int(ids.size())); ++i) {
      row.feature_ids.push_back(ids[std::size_t(i)]);
      row.values.push_back(value(data));
    }
    rows.push_back(row);
    for (int k = 0; k < 2; ++k) {
      query_rows.push_back(r);
      levels.push_back(uniform_open(data));
      targets.push_back(value(data));
    }
  }
  const FeatureBatch batch = FeatureBatch::from_rows(rows, config.feature_vocab_capacity);
  const QuantileQuery query{query_rows, levels};

  return check_gradients(model.params(), [&](Tape& tape) {
    ModelGraph graph(tape, model);
    return pinball_loss(graph.forward(batch, query), targets, levels);
  });
}

}  // namespace niaque
