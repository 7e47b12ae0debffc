// Copyright 2026 The niaque Authors.
// SPDX-License-Identifier: Apache-2.0

#include "niaque/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "niaque/container.hpp"
#include "niaque/errors.hpp"

namespace niaque {

namespace {

std::optional<double> parse_number(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

bool is_missing(const std::string& cell) {
  return cell.find_first_not_of(" \t") == std::string::npos;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::size_t Table::column_index(std::string_view name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw DataError("no column named '" + std::string(name) + "'");
  return std::size_t(it - columns.begin());
}

Table parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string cell;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      record.push_back(std::move(cell));
      cell.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !cell.empty()) {
        record.push_back(std::move(cell));
        records.push_back(std::move(record));
      }
      record.clear();
      cell.clear();
      any = false;
    } else {
      cell += c;
      any = true;
    }
  }
  if (quoted) throw DataError("csv: unterminated quoted field");
  if (any || !cell.empty()) {
    record.push_back(std::move(cell));
    records.push_back(std::move(record));
  }
  if (records.empty()) throw DataError("csv: no header row");

  Table table;
  table.columns = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.columns.size()) {
      throw DataError("csv: line " + std::to_string(r + 1) + " has " +
                      std::to_string(records[r].size()) + " fields, header has " +
                      std::to_string(table.columns.size()));
    }
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

Table read_csv(const std::filesystem::path& path) {
  try {
    return parse_csv(read_file(path));
  } catch (const DataError& e) {
    const std::string what = e.what();
    if (what.rfind("cannot open", 0) == 0) throw;
    throw DataError(path.string() + ": " + what);
  }
}

std::vector<ManifestEntry> parse_manifest(std::string_view text,
                                          const std::filesystem::path& base_dir) {
  std::vector<ManifestEntry> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (std::size_t tab; (tab = line.find('\t', start)) != std::string::npos; start = tab + 1) {
      fields.push_back(line.substr(start, tab - start));
    }
    fields.push_back(line.substr(start));
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty() || fields[2].empty()) {
      throw DataError("manifest line " + std::to_string(lineno) +
                      ": expected name<TAB>csv_path<TAB>target_column");
    }
    std::filesystem::path p(fields[1]);
    if (p.is_relative()) p = base_dir / p;
    out.push_back({fields[0], p, fields[2]});
  }
  return out;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_file(path), path.parent_path());
}

double ColumnInfo::encode(const std::string& cell) const {
  if (!categorical()) {
    auto v = parse_number(cell);
    if (!v) throw DataError("column '" + name + "': '" + cell + "' is not a number");
    return *v;
  }
  auto it = std::lower_bound(categories.begin(), categories.end(), cell);
  if (it == categories.end() || *it != cell) {
    throw DataError("column '" + name + "': unknown category '" + cell + "'");
  }
  return double(it - categories.begin());
}

nlohmann::json DatasetMeta::to_json() const {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : columns) cols.push_back({{"name", c.name}, {"categories", c.categories}});
  return {{"name", name},
          {"source_path", source_path},
          {"target_column", target_column},
          {"n_rows", n_rows},
          {"n_features", n_features},
          {"y_min", y_min},
          {"y_max", y_max},
          {"columns", cols},
          {"feature_ids", feature_ids},
          {"split_seed", split_seed},
          {"row_cap", row_cap}};
}

DatasetMeta DatasetMeta::from_json(const nlohmann::json& j) {
  DatasetMeta m;
  try {
    m.name = j.at("name").get<std::string>();
    m.source_path = j.at("source_path").get<std::string>();
    m.target_column = j.at("target_column").get<std::string>();
    m.n_rows = j.at("n_rows").get<Index>();
    m.n_features = j.at("n_features").get<Index>();
    m.y_min = j.at("y_min").get<double>();
    m.y_max = j.at("y_max").get<double>();
    for (const auto& c : j.at("columns")) {
      m.columns.push_back(
          {c.at("name").get<std::string>(), c.at("categories").get<std::vector<std::string>>()});
    }
    m.feature_ids = j.at("feature_ids").get<std::vector<std::int64_t>>();
    m.split_seed = j.at("split_seed").get<std::uint64_t>();
    m.row_cap = j.at("row_cap").get<Index>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("dataset metadata: ") + e.what());
  }
  return m;
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "val") return Split::val;
  if (name == "test") return Split::test;
  throw DataError("unknown split '" + std::string(name) + "'");
}

const std::vector<FeatureRow>& SplitDataset::split(Split s) const {
  switch (s) {
    case Split::train: return train;
    case Split::val: return val;
    case Split::test: return test;
  }
  return test;
}

SplitDataset ingest_table(const Table& table, const std::string& name,
                          const std::string& target_column, const IngestOptions& options,
                          const std::string& source_path) {
  if (options.max_rows < 1) throw DataError("ingest: max_rows must be positive");
  const std::size_t target = table.column_index(target_column);
  {
    std::set<std::string> seen;
    for (const auto& c : table.columns) {
      if (!seen.insert(c).second) {
        throw DataError("dataset '" + name + "': duplicate column '" + c + "'");
      }
    }
  }

  // Rows with a usable target and at least one present feature.
  std::vector<std::size_t> usable;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& cells = table.rows[r];
    if (is_missing(cells[target])) continue;
    if (!parse_number(cells[target])) {
      throw DataError("dataset '" + name + "': target '" + target_column + "' value '" +
                      cells[target] + "' on data line " + std::to_string(r + 1) +
                      " is not numeric");
    }
    bool present = false;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c != target && !is_missing(cells[c])) present = true;
    }
    if (present) usable.push_back(r);
  }
  if (usable.empty()) throw DataError("dataset '" + name + "' has no usable rows");

  Rng rng = make_stream(options.seed, "split/" + name);
  if (Index(usable.size()) > options.max_rows) {
    std::vector<std::size_t> keep(usable.size());
    std::iota(keep.begin(), keep.end(), std::size_t(0));
    std::shuffle(keep.begin(), keep.end(), rng);
    keep.resize(std::size_t(options.max_rows));
    std::sort(keep.begin(), keep.end());
    for (auto& k : keep) k = usable[k];
    usable = std::move(keep);
  }

  DatasetMeta meta;
  meta.name = name;
  meta.source_path = source_path;
  meta.target_column = target_column;
  meta.split_seed = options.seed;
  meta.row_cap = options.max_rows;
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (c == target) continue;
    feature_cols.push_back(c);
    ColumnInfo info{table.columns[c], {}};
    bool numeric = true;
    std::set<std::string> cats;
    for (std::size_t r : usable) {
      const auto& cell = table.rows[r][c];
      if (is_missing(cell)) continue;
      cats.insert(cell);
      if (numeric && !parse_number(cell)) numeric = false;
    }
    if (!numeric) info.categories.assign(cats.begin(), cats.end());
    meta.columns.push_back(std::move(info));
  }
  if (feature_cols.empty()) throw DataError("dataset '" + name + "' has no feature columns");
  meta.n_features = Index(feature_cols.size());
  meta.n_rows = Index(usable.size());

  std::vector<double> targets;
  for (std::size_t r : usable) targets.push_back(*parse_number(table.rows[r][target]));
  auto [lo, hi] = std::minmax_element(targets.begin(), targets.end());
  meta.y_min = *lo;
  meta.y_max = *hi;
  if (!(meta.y_max > meta.y_min)) {
    throw DataError("dataset '" + name + "' has a constant target");
  }

  std::vector<FeatureRow> rows;
  rows.reserve(usable.size());
  for (std::size_t k = 0; k < usable.size(); ++k) {
    const auto& cells = table.rows[usable[k]];
    FeatureRow row;
    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
      const auto& cell = cells[feature_cols[j]];
      if (is_missing(cell)) continue;
      row.feature_ids.push_back(std::int64_t(j));
      row.values.push_back(meta.columns[j].encode(cell));
    }
    row.target = meta.normalize(targets[k]);
    rows.push_back(std::move(row));
  }

  // Seeded permutation, then 80/10/10 by position.
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), std::size_t(0));
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t n = rows.size();
  const auto n_train = std::size_t(std::llround(0.8 * double(n)));
  const auto n_val = std::min(n - n_train, std::size_t(std::llround(0.1 * double(n))));
  SplitDataset out;
  out.meta = std::move(meta);
  for (std::size_t i = 0; i < n; ++i) {
    auto& dest = i < n_train ? out.train : i < n_train + n_val ? out.val : out.test;
    dest.push_back(std::move(rows[order[i]]));
  }
  return out;
}

SplitDataset ingest(const ManifestEntry& entry, const IngestOptions& options) {
  const Table table = read_csv(entry.csv_path);
  return ingest_table(table, entry.name, entry.target_column, options, entry.csv_path.string());
}

std::int64_t FeatureRegistry::assign(const std::string& dataset, const std::string& column) {
  if (auto id = find(dataset, column)) return *id;
  entries_.push_back({dataset, column});
  return next_id() - 1;
}

std::optional<std::int64_t> FeatureRegistry::find(const std::string& dataset,
                                                  const std::string& column) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].dataset == dataset && entries_[i].column == column) return std::int64_t(i);
  }
  return std::nullopt;
}

const FeatureRegistry::Entry& FeatureRegistry::entry(std::int64_t id) const {
  if (id < 0 || id >= next_id()) {
    throw VocabularyError("feature ID " + std::to_string(id) + " is not registered");
  }
  return entries_[std::size_t(id)];
}

bool FeatureRegistry::has_dataset(const std::string& dataset) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const Entry& e) { return e.dataset == dataset; });
}

nlohmann::json FeatureRegistry::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : entries_) out.push_back({e.dataset, e.column});
  return out;
}

FeatureRegistry FeatureRegistry::from_json(const nlohmann::json& j) {
  FeatureRegistry r;
  try {
    for (const auto& e : j) {
      r.entries_.push_back({e.at(0).get<std::string>(), e.at(1).get<std::string>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("feature registry: ") + e.what());
  }
  return r;
}

FeatureRegistry register_features(std::span<SplitDataset> datasets) {
  std::set<std::string> names;
  for (const auto& d : datasets) {
    if (!names.insert(d.meta.name).second) {
      throw DataError("dataset '" + d.meta.name + "' is listed twice");
    }
  }
  FeatureRegistry registry;
  for (auto& d : datasets) bind_features(d, registry);
  return registry;
}

namespace {

void remap(std::vector<FeatureRow>& rows, const std::vector<std::int64_t>& ids) {
  for (auto& row : rows) {
    for (auto& id : row.feature_ids) id = ids[std::size_t(id)];
  }
}

}  // namespace

void bind_features(SplitDataset& dataset, FeatureRegistry& registry) {
  auto& meta = dataset.meta;
  if (dataset.bound()) {
    for (std::size_t c = 0; c < meta.columns.size(); ++c) {
      auto id = registry.find(meta.name, meta.columns[c].name);
      if (!id || *id != meta.feature_ids[c]) {
        throw DataError("dataset '" + meta.name + "' is bound to a different registry");
      }
    }
    return;
  }
  std::vector<std::int64_t> ids;
  for (const auto& c : meta.columns) ids.push_back(registry.assign(meta.name, c.name));
  remap(dataset.train, ids);
  remap(dataset.val, ids);
  remap(dataset.test, ids);
  meta.feature_ids = std::move(ids);
}

std::vector<FeatureRow> sample_batch(std::span<const SplitDataset> datasets, Index batch_size,
                                     Rng& rng) {
  if (batch_size < 1) throw DataError("sample_batch: batch size must be positive");
  std::vector<std::size_t> ends;
  std::size_t total = 0;
  for (const auto& d : datasets) {
    total += d.train.size();
    ends.push_back(total);
  }
  if (total == 0) throw DataError("sample_batch: no training rows");
  std::uniform_int_distribution<std::size_t> pick(0, total - 1);
  std::vector<FeatureRow> batch;
  batch.reserve(std::size_t(batch_size));
  for (Index b = 0; b < batch_size; ++b) {
    const std::size_t k = pick(rng);
    const std::size_t d = std::size_t(std::upper_bound(ends.begin(), ends.end(), k) - ends.begin());
    const std::size_t start = d == 0 ? 0 : ends[d - 1];
    batch.push_back(datasets[d].train[k - start]);
  }
  return batch;
}

namespace {

FeatureRow drop_features(const FeatureRow& row, double keep_drop, Rng& rng) {
  std::bernoulli_distribution drop(keep_drop);
  for (;;) {
    FeatureRow out;
    out.target = row.target;
    for (Index i = 0; i < row.size(); ++i) {
      if (drop(rng)) continue;
      out.feature_ids.push_back(row.feature_ids[std::size_t(i)]);
      out.values.push_back(row.values[std::size_t(i)]);
    }
    if (out.size() > 0) return out;
  }
}

void check_rate(double rate, const char* what) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw DomainError(std::string(what) + " must lie in [0, 1)");
  }
}

}  // namespace

FeatureRow feature_dropout(const FeatureRow& row, double dp, Rng& rng) {
  check_rate(dp, "feature dropout rate");
  if (dp == 0.0 || row.size() <= 1) return row;
  const double p = std::sqrt(dp);
  if (!std::bernoulli_distribution(p)(rng)) return row;
  return drop_features(row, p, rng);
}

std::vector<FeatureRow> feature_dropout(std::span<const FeatureRow> batch, double dp, Rng& rng) {
  check_rate(dp, "feature dropout rate");
  std::vector<FeatureRow> out(batch.begin(), batch.end());
  if (dp == 0.0) return out;
  const double p = std::sqrt(dp);
  if (!std::bernoulli_distribution(p)(rng)) return out;
  for (auto& row : out) {
    if (row.size() > 1) row = drop_features(row, p, rng);
  }
  return out;
}

std::vector<FeatureRow> single_feature_augment(std::span<const FeatureRow> batch, double ratio,
                                               Rng& rng) {
  check_rate(ratio, "single-feature ratio");
  std::vector<FeatureRow> out(batch.begin(), batch.end());
  if (ratio == 0.0) return out;
  std::bernoulli_distribution replace(ratio);
  for (auto& row : out) {
    if (!replace(rng)) continue;
    std::uniform_int_distribution<Index> pick(0, row.size() - 1);
    const auto i = std::size_t(pick(rng));
    row = FeatureRow{{row.feature_ids[i]}, {row.values[i]}, row.target};
  }
  return out;
}

SplitDataset subsample_train(const SplitDataset& dataset, double fraction, Rng& rng) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw DomainError("data fraction must lie in (0, 1]");
  SplitDataset out = dataset;
  if (fraction == 1.0 || dataset.train.empty()) return out;
  const std::size_t n = dataset.train.size();
  const auto keep = std::max<std::size_t>(1, std::size_t(std::llround(fraction * double(n))));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t(0));
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(keep);
  std::sort(idx.begin(), idx.end());
  out.train.clear();
  for (std::size_t i : idx) out.train.push_back(dataset.train[i]);
  return out;
}

namespace {

const char* split_name(Split s) {
  return s == Split::train ? "train" : s == Split::val ? "val" : "test";
}

}  // namespace

void save_dataset(const std::filesystem::path& path, const SplitDataset& dataset) {
  Container c;
  c.meta()["kind"] = "dataset";
  c.meta()["dataset"] = dataset.meta.to_json();
  for (Split s : {Split::train, Split::val, Split::test}) {
    const auto& rows = dataset.split(s);
    const std::string prefix = split_name(s);
    c.meta()["rows"][prefix] = rows.size();
    if (rows.empty()) continue;
    std::vector<std::int64_t> offsets{0}, ids;
    std::vector<double> values, targets;
    for (const auto& row : rows) {
      ids.insert(ids.end(), row.feature_ids.begin(), row.feature_ids.end());
      values.insert(values.end(), row.values.begin(), row.values.end());
      offsets.push_back(std::int64_t(ids.size()));
      if (!row.target) throw DataError("save_dataset: row without a target");
      targets.push_back(*row.target);
    }
    c.put_i64(prefix + ".offsets", {Index(offsets.size())}, offsets);
    c.put_i64(prefix + ".ids", {Index(ids.size())}, ids);
    c.put_f64(prefix + ".values", {Index(values.size())}, values);
    c.put_f64(prefix + ".targets", {Index(targets.size())}, targets);
  }
  c.save(path);
}

SplitDataset load_dataset(const std::filesystem::path& path) {
  const Container c = Container::load(path);
  if (c.meta().value("kind", "") != "dataset") {
    throw FormatError("'" + path.string() + "' is not a dataset store");
  }
  SplitDataset out;
  out.meta = DatasetMeta::from_json(c.meta().at("dataset"));
  for (Split s : {Split::train, Split::val, Split::test}) {
    const std::string prefix = split_name(s);
    auto& rows = s == Split::train ? out.train : s == Split::val ? out.val : out.test;
    if (!c.contains(prefix + ".offsets")) continue;
    const auto offsets = c.integers(prefix + ".offsets");
    const auto ids = c.integers(prefix + ".ids");
    const Tensor values = c.tensor(prefix + ".values");
    const Tensor targets = c.tensor(prefix + ".targets");
    for (std::size_t r = 0; r + 1 < offsets.size(); ++r) {
      FeatureRow row;
      for (auto k = offsets[r]; k < offsets[r + 1]; ++k) {
        row.feature_ids.push_back(ids[std::size_t(k)]);
        row.values.push_back(values[Index(k)]);
      }
      row.target = targets[Index(r)];
      rows.push_back(std::move(row));
    }
  }
  return out;
}

}  // namespace niaque
