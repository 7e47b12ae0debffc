// Copyright 2026 The niaque Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "niaque/errors.hpp"
#include "niaque/interpret.hpp"
#include "niaque/synthetic.hpp"
#include "niaque/trainer.hpp"

using namespace niaque;

namespace {

NiaqueModel random_model(std::uint64_t seed) {
  NiaqueConfig c;
  c.blocks = 1;
  c.layers_per_block = 1;
  c.latent_dim = 8;
  c.input_embed_dim = 4;
  c.feature_vocab_capacity = 16;
  Rng rng = make_stream(seed, "interpret-test");
  NiaqueModel model(c, rng);
  std::normal_distribution<double> normal(0.0, 0.4);
  for (auto& p : model.params())
    for (double& v : p.value.values()) v = normal(rng);
  return model;
}

SplitDataset bound_dataset() {
  std::vector<SplitDataset> ds{generate(SyntheticTask::hetero_gaussian(), 300, 9)};
  register_features(ds);
  return ds[0];
}

}  // namespace

TEST_CASE("weights are normalized inverse widths sorted by weight") {
  const std::vector<std::int64_t> ids{7, 3, 5};
  const std::vector<double> widths{1.0, 4.0, 2.0};
  const auto r = importance_from_widths(ids, widths);
  REQUIRE(r.features.size() == 3);
  CHECK(r.features[0].feature_id == 7);
  CHECK(r.features[1].feature_id == 5);
  CHECK(r.features[2].feature_id == 3);
  CHECK(r.features[0].weight == doctest::Approx(4.0 / 7.0));
  CHECK(r.features[1].weight == doctest::Approx(2.0 / 7.0));
  CHECK(r.features[2].weight == doctest::Approx(1.0 / 7.0));
  CHECK(r.features[2].ci_width == 4.0);

  const std::vector<std::int64_t> tie_ids{9, 2};
  const std::vector<double> tie_widths{3.0, 3.0};
  const auto tie = importance_from_widths(tie_ids, tie_widths);
  CHECK(tie.features[0].feature_id == 2);
  CHECK(tie.features[0].weight == 0.5);
}

TEST_CASE("non-positive widths are reported by feature") {
  const std::vector<std::int64_t> ids{1, 2, 3};
  const std::vector<double> widths{1.0, 0.0, -0.5};
  CHECK_THROWS_WITH_AS(importance_from_widths(ids, widths),
                       doctest::Contains("2 (width 0), 3 (width -0.5)"), DegenerateModelError);
  const std::vector<double> short_widths{1.0};
  CHECK_THROWS_AS(importance_from_widths(ids, short_widths), DimensionError);
}

TEST_CASE("importance csv layout") {
  ImportanceReport r;
  r.features.push_back({4, "wine", "acidity", 1.23456789, 0.75});
  r.features.push_back({2, "wine", "sugar", 3.5, 0.25});
  CHECK(r.to_csv() ==
        "feature_id,dataset,column,ci_width,weight\n"
        "4,wine,acidity,1.23457,0.75\n"
        "2,wine,sugar,3.5,0.25\n");
}

TEST_CASE("marginal interval averages single-feature predictions") {
  const NiaqueModel model = random_model(1);
  const SplitDataset ds = bound_dataset();
  const std::int64_t id = ds.meta.feature_ids[1];
  double sum = 0;
  int count = 0;
  const std::vector<double> levels{0.05, 0.95};
  for (const auto& row : ds.val) {
    for (Index i = 0; i < row.size(); ++i) {
      if (row.feature_ids[std::size_t(i)] != id) continue;
      const FeatureRow single{{id}, {row.values[std::size_t(i)]}, std::nullopt};
      const auto p = forward(model, std::span<const FeatureRow>(&single, 1), levels);
      sum += p.values[1] - p.values[0];
      ++count;
    }
  }
  REQUIRE(count > 0);
  CHECK(marginal_ci(model, ds.val, id, 0.1) == doctest::Approx(sum / count).epsilon(1e-12));
  CHECK_THROWS_AS(marginal_ci(model, ds.val, 15, 0.1), DataError);
  CHECK_THROWS_AS(marginal_ci(model, ds.val, id, 1.5), DomainError);
}

TEST_CASE("dataset importance names every column and sums to one") {
  std::vector<SplitDataset> data{bound_dataset()};
  const auto& ds = data[0];
  FeatureRegistry reg;
  for (std::int64_t id = 0; id < 5; ++id) reg.assign(ds.meta.name, "x" + std::to_string(id + 1));
  TrainConfig t;
  t.batch_size = 64;
  t.lr = 3e-3;
  t.total_batches = 100;
  t.seed = 2;
  const NiaqueModel model = pretrain(data, reg, random_model(2).config(), t).final.model;
  const ImportanceReport r = importance_weights(model, ds);
  REQUIRE(r.features.size() == 5);
  double total = 0;
  for (const auto& f : r.features) {
    total += f.weight;
    CHECK(f.dataset == ds.meta.name);
    CHECK(f.column == "x" + std::to_string(f.feature_id + 1));
    CHECK(f.ci_width == doctest::Approx(marginal_ci(model, ds.val, f.feature_id)));
  }
  CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("removal response compares median AAD with and without features") {
  const NiaqueModel model = random_model(3);
  const SplitDataset ds = bound_dataset();
  const std::vector<std::int64_t> ids(ds.meta.feature_ids);
  const std::vector<double> widths{1, 2, 3, 4, 5};
  const auto report = importance_from_widths(ids, widths);
  CHECK(removal_response(model, ds, report, true, 0) == 0.0);

  auto aad = [&](const std::vector<FeatureRow>& rows) {
    const std::vector<double> level{0.5};
    const auto p = forward(model, rows, level);
    double s = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) s += std::abs(*rows[i].target - p.values[Index(i)]);
    return s / double(rows.size());
  };
  auto without = [&](std::int64_t id) {
    std::vector<FeatureRow> out;
    for (auto row : ds.test) {
      for (Index i = 0; i < row.size(); ++i) {
        if (row.feature_ids[std::size_t(i)] == id) {
          row.feature_ids.erase(row.feature_ids.begin() + i);
          row.values.erase(row.values.begin() + i);
          break;
        }
      }
      out.push_back(row);
    }
    return out;
  };
  const double base = aad(ds.test);
  // Widest interval is x5 (lowest weight); narrowest is x1 (highest weight).
  CHECK(removal_response(model, ds, report, true, 1) ==
        doctest::Approx(aad(without(ids[0])) - base).epsilon(1e-10));
  CHECK(removal_response(model, ds, report, false, 1) ==
        doctest::Approx(aad(without(ids[4])) - base).epsilon(1e-10));
  CHECK_THROWS_AS(removal_response(model, ds, report, true, 5), DomainError);

  SplitDataset single = ds;
  for (auto& row : single.test) {
    row.feature_ids.resize(1);
    row.values.resize(1);
  }
  CHECK_THROWS_AS(removal_response(model, single, report, true, 1), DataError);
}
