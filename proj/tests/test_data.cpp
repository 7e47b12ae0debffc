// Copyright 2026 The niaque Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>

#include "doctest.h"
#include "niaque/data.hpp"
#include "niaque/errors.hpp"

using namespace niaque;

namespace {

Table numeric_table(Index n, int features, std::uint64_t seed) {
  Rng rng = make_stream(seed, "table");
  std::uniform_real_distribution<double> u(-5, 5);
  Table t;
  for (int j = 0; j < features; ++j) t.columns.push_back("f" + std::to_string(j));
  t.columns.push_back("target");
  for (Index i = 0; i < n; ++i) {
    std::vector<std::string> cells;
    for (int j = 0; j <= features; ++j) cells.push_back(std::to_string(u(rng)));
    t.rows.push_back(cells);
  }
  return t;
}

std::vector<FeatureRow> all_rows(const SplitDataset& d) {
  std::vector<FeatureRow> rows = d.train;
  rows.insert(rows.end(), d.val.begin(), d.val.end());
  rows.insert(rows.end(), d.test.begin(), d.test.end());
  return rows;
}

SplitDataset constant_rows(const std::string& name, std::size_t n, double target,
                           std::int64_t first_id, int d) {
  SplitDataset ds;
  ds.meta.name = name;
  for (int j = 0; j < d; ++j) {
    ds.meta.columns.push_back({"c" + std::to_string(j), {}});
    ds.meta.feature_ids.push_back(first_id + j);
  }
  FeatureRow row;
  for (int j = 0; j < d; ++j) {
    row.feature_ids.push_back(first_id + j);
    row.values.push_back(double(j));
  }
  row.target = target;
  ds.train.assign(n, row);
  return ds;
}

}  // namespace

TEST_CASE("csv parsing handles quotes, CRLF and ragged lines") {
  const Table t = parse_csv("a,b,c\r\n1,\"x,y\",\"say \"\"hi\"\"\"\r\n,2,\n");
  REQUIRE(t.columns == std::vector<std::string>{"a", "b", "c"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][1] == "x,y");
  CHECK(t.rows[0][2] == "say \"hi\"");
  CHECK(t.rows[1][0].empty());
  CHECK(t.rows[1][2].empty());
  CHECK_THROWS_AS(parse_csv("a,b\n1\n"), DataError);
  CHECK_THROWS_AS(parse_csv(""), DataError);
  CHECK_THROWS_AS(parse_csv("a\n\"open\n"), DataError);
}

TEST_CASE("manifest lines, comments and relative paths") {
  const auto m = parse_manifest("# datasets\nwine\tdata/wine.csv\tquality\n\n"
                                "abs\t/tmp/abs.csv\ty\n",
                                "/base");
  REQUIRE(m.size() == 2);
  CHECK(m[0].name == "wine");
  CHECK(m[0].csv_path == std::filesystem::path("/base/data/wine.csv"));
  CHECK(m[0].target_column == "quality");
  CHECK(m[1].csv_path == std::filesystem::path("/tmp/abs.csv"));
  CHECK_THROWS_AS(parse_manifest("only two\tfields\n", "/"), DataError);
  CHECK_THROWS_WITH_AS(read_manifest("/nonexistent/manifest.tsv"),
                       doctest::Contains("/nonexistent/manifest.tsv"), DataError);
}

TEST_CASE("targets are mapped linearly onto [0, 10]") {
  const Table t = parse_csv("x,y\n1,2\n2,4\n3,6\n");
  const SplitDataset d = ingest_table(t, "tiny", "y", {});
  std::vector<double> targets;
  for (const auto& r : all_rows(d)) targets.push_back(*r.target);
  std::sort(targets.begin(), targets.end());
  CHECK(targets == std::vector<double>{0.0, 5.0, 10.0});
  CHECK(d.meta.y_min == 2.0);
  CHECK(d.meta.y_max == 6.0);
  CHECK(d.meta.denormalize(5.0) == 4.0);
}

TEST_CASE("row cap keeps 20000 of 25000 rows and normalizes on the kept set") {
  const Table t = numeric_table(25000, 3, 5);
  const SplitDataset d = ingest_table(t, "big", "target", IngestOptions{20000, 9});
  CHECK(d.meta.n_rows == 20000);
  CHECK(d.train.size() == 16000);
  CHECK(d.val.size() == 2000);
  CHECK(d.test.size() == 2000);
  double lo = 1e300, hi = -1e300;
  for (const auto& r : all_rows(d)) {
    lo = std::min(lo, *r.target);
    hi = std::max(hi, *r.target);
  }
  CHECK(lo == 0.0);
  CHECK(hi == 10.0);
}

TEST_CASE("missing cells drop the pair, rows without target or features are dropped") {
  const Table t = parse_csv(
      "a,b,c,d,e,y\n"
      "1,2,3,4,5,1\n"
      "1,,3,4,5,2\n"
      ",,,,,3\n"
      "1,2,3,4,5,\n"
      "0,0,0,0,0,4\n");
  const SplitDataset d = ingest_table(t, "gaps", "y", {});
  const auto rows = all_rows(d);
  REQUIRE(rows.size() == 3);
  CHECK(d.meta.n_rows == 3);
  std::map<double, Index> width;
  for (const auto& r : rows) width[d.meta.denormalize(*r.target)] = r.size();
  CHECK(width.at(1.0) == 5);
  CHECK(width.at(2.0) == 4);
  CHECK(width.at(4.0) == 5);
}

TEST_CASE("categorical columns are encoded by sorted category position") {
  const Table t = parse_csv("color,size,y\nred,1,1\nblue,2,2\ngreen,3,3\nblue,4,4\n");
  const SplitDataset d = ingest_table(t, "cats", "y", {});
  REQUIRE(d.meta.columns[0].categorical());
  CHECK(d.meta.columns[0].categories == std::vector<std::string>{"blue", "green", "red"});
  CHECK_FALSE(d.meta.columns[1].categorical());
  for (const auto& r : all_rows(d)) {
    const double y = d.meta.denormalize(*r.target);
    const double expected = y == 1 ? 2 : y == 3 ? 1 : 0;
    CHECK(r.values[0] == expected);
  }
}

TEST_CASE("ingest rejects constant, empty and non-numeric targets") {
  CHECK_THROWS_AS(ingest_table(parse_csv("x,y\n1,3\n2,3\n"), "c", "y", {}), DataError);
  CHECK_THROWS_AS(ingest_table(parse_csv("x,y\n"), "e", "y", {}), DataError);
  CHECK_THROWS_AS(ingest_table(parse_csv("x,y\n1,a\n2,b\n"), "s", "y", {}), DataError);
  CHECK_THROWS_AS(ingest_table(parse_csv("x,y\n1,2\n"), "m", "target", {}), DataError);
  CHECK_THROWS_AS(ingest_table(parse_csv("x,x,y\n1,2,3\n2,3,4\n"), "d", "y", {}), DataError);
}

TEST_CASE("splits partition the rows and depend only on the seed") {
  const Table t = numeric_table(1003, 2, 8);
  const SplitDataset a = ingest_table(t, "p", "target", IngestOptions{20000, 4});
  const SplitDataset b = ingest_table(t, "p", "target", IngestOptions{20000, 4});
  const SplitDataset c = ingest_table(t, "p", "target", IngestOptions{20000, 5});
  CHECK(a == b);
  CHECK_FALSE(a.train == c.train);
  CHECK(a.train.size() == 802);
  CHECK(a.val.size() == 100);
  CHECK(a.test.size() == 101);

  // Each source row (identified by its first feature value) lands in
  // exactly one split.
  std::multiset<double> seen;
  for (const auto& r : all_rows(a)) seen.insert(r.values[0]);
  CHECK(seen.size() == 1003);
  std::set<double> unique(seen.begin(), seen.end());
  CHECK(unique.size() == 1003);

  const SplitDataset ten = ingest_table(numeric_table(10, 2, 1), "ten", "target", {});
  CHECK(ten.train.size() == 8);
  CHECK(ten.val.size() == 1);
  CHECK(ten.test.size() == 1);
}

TEST_CASE("feature registry is dense, idempotent and append-only") {
  auto make = [] {
    std::vector<SplitDataset> ds;
    ds.push_back(ingest_table(parse_csv("a,b,c,y\n1,2,3,1\n2,3,4,2\n"), "one", "y", {}));
    ds.push_back(ingest_table(parse_csv("u,v,y\n1,2,1\n3,4,2\n"), "two", "y", {}));
    return ds;
  };
  auto first = make();
  auto second = make();
  const FeatureRegistry r1 = register_features(first);
  const FeatureRegistry r2 = register_features(second);
  CHECK(r1.next_id() == 5);
  CHECK(r1 == r2);
  CHECK(first[0].meta.feature_ids == std::vector<std::int64_t>{0, 1, 2});
  CHECK(first[1].meta.feature_ids == std::vector<std::int64_t>{3, 4});
  for (const auto& row : first[1].train) CHECK(row.feature_ids == std::vector<std::int64_t>{3, 4});
  CHECK(r1.entry(3).dataset == "two");
  CHECK(r1.entry(3).column == "u");

  // Serialization round trip.
  const FeatureRegistry back = FeatureRegistry::from_json(r1.to_json());
  CHECK(back == r1);
  CHECK(back.to_json().dump() == r1.to_json().dump());

  // Appending a new dataset continues from next_id; a known one reuses IDs.
  FeatureRegistry grown = r1;
  auto extra = ingest_table(parse_csv("p,q,y\n1,2,1\n3,4,2\n"), "three", "y", {});
  bind_features(extra, grown);
  CHECK(extra.meta.feature_ids == std::vector<std::int64_t>{5, 6});
  auto again = make();
  bind_features(again[1], grown);
  CHECK(again[1].meta.feature_ids == std::vector<std::int64_t>{3, 4});
  CHECK(grown.next_id() == 7);

  auto dup = make();
  dup[1].meta.name = "one";
  CHECK_THROWS_AS(register_features(dup), DataError);
}

TEST_CASE("sample_batch draws uniformly from the union of train rows") {
  std::vector<SplitDataset> ds{constant_rows("big", 18000, 1.0, 0, 2),
                               constant_rows("small", 2000, 2.0, 2, 2)};
  Rng rng = make_stream(3, "sampling");
  Index first = 0;
  const Index draws = 1000000;
  for (Index done = 0; done < draws; done += 1000) {
    for (const auto& row : sample_batch(ds, 1000, rng)) first += *row.target == 1.0;
  }
  // Binomial(1e6, 0.9): sd 3e-4; the stated tolerance is 0.01.
  CHECK(std::abs(double(first) / double(draws) - 0.9) <= 0.01);

  CHECK(sample_batch(ds, 1, rng).size() == 1);
  Rng a = make_stream(11, "s"), b = make_stream(11, "s");
  for (int i = 0; i < 5; ++i) CHECK(sample_batch(ds, 64, a) == sample_batch(ds, 64, b));
  CHECK_THROWS_AS(sample_batch(std::vector<SplitDataset>{}, 4, rng), DataError);
}

TEST_CASE("feature dropout removes each feature with marginal probability dp") {
  Rng rng = make_stream(5, "dropout");
  FeatureRow row;
  for (int j = 0; j < 10; ++j) {
    row.feature_ids.push_back(j);
    row.values.push_back(j * 0.5);
  }
  row.target = 1.0;
  CHECK(feature_dropout(row, 0.0, rng) == row);
  const FeatureRow single{{3}, {1.0}, 2.0};
  for (int i = 0; i < 100; ++i) CHECK(feature_dropout(single, 0.5, rng) == single);

  // 1e5 rows of 10 features = 1e6 features, each row its own gate.
  const double dp = 0.2;
  const int rows = 100000;
  Index removed = 0;
  for (int i = 0; i < rows; ++i) {
    const FeatureRow out = feature_dropout(row, dp, rng);
    REQUIRE(out.size() >= 1);
    CHECK(out.target == row.target);
    removed += row.size() - out.size();
  }
  const double rate = double(removed) / double(rows * 10);
  CHECK(std::abs(rate - dp) <= 0.002);
  // Three-sigma bound for the gated scheme: per row the removal count is
  // g * Binomial(10, p) with g ~ Bernoulli(p), p = sqrt(dp).
  const double p = std::sqrt(dp);
  const double var_row = p * 10 * p * (1 - p) + p * (1 - p) * (10 * p) * (10 * p);
  const double sigma = std::sqrt(var_row * rows) / (rows * 10.0);
  CHECK(std::abs(rate - dp) <= 3 * sigma);
}

TEST_CASE("batch feature dropout shares one gate") {
  Rng rng = make_stream(6, "batch-dropout");
  std::vector<FeatureRow> batch(64, FeatureRow{{0, 1, 2, 3}, {1, 2, 3, 4}, 0.5});
  int opened = 0;
  const int trials = 4000;
  for (int t = 0; t < trials; ++t) {
    const auto out = feature_dropout(batch, 0.2, rng);
    bool any = false;
    for (const auto& r : out) any = any || r.size() < 4;
    opened += any;
  }
  // P(gate open and something dropped) ~ sqrt(0.2) since 64 rows almost
  // surely lose a feature once the gate opens.
  const double p = std::sqrt(0.2);
  CHECK(std::abs(double(opened) / trials - p) <= 3 * std::sqrt(p * (1 - p) / trials));
}

TEST_CASE("single-feature augmentation") {
  Rng rng = make_stream(7, "augment");
  std::vector<FeatureRow> batch(512, FeatureRow{{4, 7, 9}, {0.1, 0.2, 0.3}, 6.0});
  CHECK(single_feature_augment(batch, 0.0, rng) == batch);
  const auto out = single_feature_augment(batch, 0.05, rng);
  int singles = 0;
  for (const auto& r : out) {
    if (r.size() == 3) continue;
    REQUIRE(r.size() == 1);
    ++singles;
    CHECK(r.target == 6.0);
    const auto it = std::find(batch[0].feature_ids.begin(), batch[0].feature_ids.end(),
                              r.feature_ids[0]);
    REQUIRE(it != batch[0].feature_ids.end());
    CHECK(r.values[0] == batch[0].values[std::size_t(it - batch[0].feature_ids.begin())]);
  }
  // Binomial(512, 0.05): mean 25.6, sd 4.93.
  CHECK(std::abs(singles - 25.6) <= 3 * 4.93);
  CHECK_THROWS_AS(single_feature_augment(batch, 1.0, rng), DomainError);
}

TEST_CASE("train subsample and dataset store round trip") {
  SplitDataset d = ingest_table(numeric_table(400, 3, 2), "store", "target", {});
  FeatureRegistry reg;
  bind_features(d, reg);
  Rng rng = make_stream(1, "sub");
  CHECK(subsample_train(d, 1.0, rng) == d);
  const auto sub = subsample_train(d, 0.05, rng);
  CHECK(sub.train.size() == 16);
  CHECK(sub.val == d.val);
  for (const auto& r : sub.train) CHECK(std::find(d.train.begin(), d.train.end(), r) != d.train.end());

  const auto path = std::filesystem::temp_directory_path() / "niaque_store_test.niaq";
  save_dataset(path, d);
  CHECK(load_dataset(path) == d);
  std::filesystem::remove(path);
}
