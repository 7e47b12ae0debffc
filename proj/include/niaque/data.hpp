// Copyright 2026 The niaque Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "niaque/model.hpp"
#include "niaque/random.hpp"

namespace niaque {

/// Parsed CSV: header names and string cells; an empty cell is missing.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  /// Throws DataError if `name` is not a column.
  std::size_t column_index(std::string_view name) const;
};

/// Comma separated, first row headers, double quotes for quoting.
Table parse_csv(std::string_view text);
Table read_csv(const std::filesystem::path& path);

struct ManifestEntry {
  std::string name;
  std::filesystem::path csv_path;
  std::string target_column;
};

/// `name<TAB>csv_path<TAB>target_column` per line; `#` lines and blank lines
/// are skipped. Relative paths resolve against `base_dir`.
std::vector<ManifestEntry> parse_manifest(std::string_view text,
                                          const std::filesystem::path& base_dir);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

/// A feature column; non-numeric columns carry their sorted category list
/// and are encoded as the category's position in it.
struct ColumnInfo {
  std::string name;
  std::vector<std::string> categories;

  bool categorical() const { return !categories.empty(); }
  /// Numeric value of a non-empty cell.
  double encode(const std::string& cell) const;
  friend bool operator==(const ColumnInfo&, const ColumnInfo&) = default;
};

struct DatasetMeta {
  std::string name;
  std::string source_path;
  std::string target_column;
  Index n_rows = 0;
  Index n_features = 0;
  double y_min = 0;
  double y_max = 1;
  std::vector<ColumnInfo> columns;
  /// Global ID of each column, empty until the dataset is registered.
  std::vector<std::int64_t> feature_ids;
  std::uint64_t split_seed = 0;
  /// Row cap applied at ingestion.
  Index row_cap = 20000;

  /// Raw target to the [0, 10] training scale.
  double normalize(double y) const { return 10.0 * (y - y_min) / (y_max - y_min); }
  double denormalize(double v) const { return y_min + v * (y_max - y_min) / 10.0; }

  nlohmann::json to_json() const;
  static DatasetMeta from_json(const nlohmann::json& j);
  friend bool operator==(const DatasetMeta&, const DatasetMeta&) = default;
};

enum class Split { train, val, test };
/// "train", "val" or "test".
Split parse_split(std::string_view name);

/// Rows hold local column positions as feature IDs until the dataset is
/// bound to a registry, and global IDs afterwards.
struct SplitDataset {
  DatasetMeta meta;
  std::vector<FeatureRow> train;
  std::vector<FeatureRow> val;
  std::vector<FeatureRow> test;

  bool bound() const { return !meta.feature_ids.empty(); }
  const std::vector<FeatureRow>& split(Split s) const;
  friend bool operator==(const SplitDataset&, const SplitDataset&) = default;
};

struct IngestOptions {
  Index max_rows = 20000;
  std::uint64_t seed = 0;
};

/// Caps the row count by seeded subsampling, maps the target onto [0, 10],
/// encodes categorical columns and splits 80/10/10. Rows with a missing
/// target, or with no feature present, are dropped.
SplitDataset ingest_table(const Table& table, const std::string& name,
                          const std::string& target_column, const IngestOptions& options,
                          const std::string& source_path = "");
SplitDataset ingest(const ManifestEntry& entry, const IngestOptions& options);

/// Append-only map (dataset, column) -> dense global feature ID.
class FeatureRegistry {
 public:
  struct Entry {
    std::string dataset;
    std::string column;
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  /// Existing ID of the pair, or the next free one.
  std::int64_t assign(const std::string& dataset, const std::string& column);
  std::optional<std::int64_t> find(const std::string& dataset, const std::string& column) const;
  const Entry& entry(std::int64_t id) const;
  std::int64_t next_id() const { return std::int64_t(entries_.size()); }
  bool has_dataset(const std::string& dataset) const;

  nlohmann::json to_json() const;
  static FeatureRegistry from_json(const nlohmann::json& j);
  friend bool operator==(const FeatureRegistry& a, const FeatureRegistry& b) {
    return a.entries_ == b.entries_;
  }

 private:
  std::vector<Entry> entries_;
};

/// Fresh registry over `datasets` in order; binds each of them. Throws
/// DataError when two datasets share a name.
FeatureRegistry register_features(std::span<SplitDataset> datasets);

/// Registers the dataset's columns (reusing IDs of known pairs) and rewrites
/// its rows to global IDs. A bound dataset is checked against the registry.
void bind_features(SplitDataset& dataset, FeatureRegistry& registry);

/// `batch_size` rows drawn uniformly with replacement from the union of all
/// train splits.
std::vector<FeatureRow> sample_batch(std::span<const SplitDataset> datasets,
                                     Index batch_size, Rng& rng);

/// Dropout of one row treated as its own batch: with probability sqrt(dp)
/// each feature is dropped with probability sqrt(dp). Rows with one feature
/// are returned unchanged; a row is never emptied.
FeatureRow feature_dropout(const FeatureRow& row, double dp, Rng& rng);
/// The same scheme with one gate for the whole batch.
std::vector<FeatureRow> feature_dropout(std::span<const FeatureRow> batch, double dp, Rng& rng);

/// Each row is, with probability `ratio`, replaced by a copy keeping one
/// uniformly chosen feature.
std::vector<FeatureRow> single_feature_augment(std::span<const FeatureRow> batch, double ratio,
                                               Rng& rng);

/// Seeded subsample of the train split keeping round(fraction * n) rows
/// (at least one) in their original order.
SplitDataset subsample_train(const SplitDataset& dataset, double fraction, Rng& rng);

void save_dataset(const std::filesystem::path& path, const SplitDataset& dataset);
SplitDataset load_dataset(const std::filesystem::path& path);

}  // namespace niaque
