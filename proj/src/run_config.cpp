// Copyright 2026 The niaque Authors.
// SPDX-License-Identifier: Apache-2.0

#include "niaque/run_config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "niaque/errors.hpp"

namespace niaque {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double to_double(const std::string& key, const std::string& s) {
  double v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw std::invalid_argument("config " + key + ": '" + s + "' is not a number");
  }
  return v;
}

long long to_integer(const std::string& key, const std::string& s) {
  long long v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw std::invalid_argument("config " + key + ": '" + s + "' is not an integer");
  }
  return v;
}

}  // namespace

RunConfig::RunConfig() {
  const NiaqueConfig m;
  const TrainConfig t;
  const IngestOptions d;
  auto def = [this](const std::string& k, std::string v) {
    fields_[k] = {std::move(v), Source::default_value};
  };
  def("model.blocks", std::to_string(m.blocks));
  def("model.layers_per_block", std::to_string(m.layers_per_block));
  def("model.latent_dim", std::to_string(m.latent_dim));
  def("model.input_embed_dim", std::to_string(m.input_embed_dim));
  def("model.hidden_width", std::to_string(m.hidden_width));
  def("model.feature_vocab_capacity", std::to_string(m.feature_vocab_capacity));
  def("model.single_feature_ratio", num(m.single_feature_ratio));
  def("model.feature_dropout_rate", num(m.feature_dropout_rate));
  def("train.batch_size", std::to_string(t.batch_size));
  def("train.lr", num(t.lr));
  def("train.lr_drop_points", "");
  def("train.lr_drop_factor", num(t.lr_drop_factor));
  def("train.total_batches", std::to_string(t.total_batches));
  def("train.seed", std::to_string(t.seed));
  def("train.quantiles_per_sample", std::to_string(t.quantiles_per_sample));
  def("train.data_fraction", num(t.data_fraction));
  def("train.validation_interval", std::to_string(t.validation_interval));
  def("train.validation_rows", std::to_string(t.validation_rows));
  def("train.finetune_lr_scale", num(t.finetune_lr_scale));
  def("data.max_rows", std::to_string(d.max_rows));
}

void RunConfig::load_text(std::string_view text, const std::string& origin) {
  std::istringstream in{std::string(text)};
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']') throw std::invalid_argument(where + ": bad section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument(where + ": expected key = value");
    if (section.empty()) throw std::invalid_argument(where + ": key outside a section");
    const std::string key = section + "." + trim(std::string_view(line).substr(0, eq));
    try {
      set(key, trim(std::string_view(line).substr(eq + 1)), Source::file);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(where + ": " + e.what());
    }
  }
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  load_text(ss.str(), path.string());
}

void RunConfig::set(const std::string& key, const std::string& value, Source source) {
  auto it = fields_.find(key);
  if (it == fields_.end()) throw std::invalid_argument("unknown config key '" + key + "'");
  it->second = {value, source};
}

void RunConfig::set_assignment(const std::string& assignment, Source source) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw std::invalid_argument("expected section.key=value, got '" + assignment + "'");
  }
  set(trim(std::string_view(assignment).substr(0, eq)),
      trim(std::string_view(assignment).substr(eq + 1)), source);
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = fields_.find(key);
  if (it == fields_.end()) throw std::invalid_argument("unknown config key '" + key + "'");
  return it->second.value;
}

RunConfig::Source RunConfig::source(const std::string& key) const {
  get(key);
  return fields_.at(key).source;
}

NiaqueConfig RunConfig::model() const {
  auto i = [this](const std::string& k) { return int(to_integer(k, get(k))); };
  auto d = [this](const std::string& k) { return to_double(k, get(k)); };
  NiaqueConfig c;
  c.blocks = i("model.blocks");
  c.layers_per_block = i("model.layers_per_block");
  c.latent_dim = i("model.latent_dim");
  c.input_embed_dim = i("model.input_embed_dim");
  c.hidden_width = i("model.hidden_width");
  c.feature_vocab_capacity = i("model.feature_vocab_capacity");
  c.single_feature_ratio = d("model.single_feature_ratio");
  c.feature_dropout_rate = d("model.feature_dropout_rate");
  c.validate();
  return c;
}

TrainConfig RunConfig::training() const {
  auto i = [this](const std::string& k) { return to_integer(k, get(k)); };
  auto d = [this](const std::string& k) { return to_double(k, get(k)); };
  TrainConfig t;
  t.batch_size = Index(i("train.batch_size"));
  t.lr = d("train.lr");
  std::string points = get("train.lr_drop_points");
  std::stringstream ss(points);
  for (std::string item; std::getline(ss, item, ',');) {
    item = trim(item);
    if (!item.empty()) t.lr_drop_points.push_back(Index(to_integer("train.lr_drop_points", item)));
  }
  t.lr_drop_factor = d("train.lr_drop_factor");
  t.total_batches = Index(i("train.total_batches"));
  const long long seed = i("train.seed");
  if (seed < 0) throw std::invalid_argument("config train.seed must be non-negative");
  t.seed = std::uint64_t(seed);
  t.quantiles_per_sample = int(i("train.quantiles_per_sample"));
  t.data_fraction = d("train.data_fraction");
  t.validation_interval = Index(i("train.validation_interval"));
  t.validation_rows = Index(i("train.validation_rows"));
  t.finetune_lr_scale = d("train.finetune_lr_scale");
  t.validate();
  return t;
}

IngestOptions RunConfig::ingest() const {
  IngestOptions o;
  o.max_rows = Index(to_integer("data.max_rows", get("data.max_rows")));
  o.seed = training().seed;
  return o;
}

std::string RunConfig::provenance() const {
  std::string out;
  for (const auto& [key, f] : fields_) {
    const char* src = f.source == Source::default_value ? "default"
                      : f.source == Source::file        ? "file"
                                                        : "flag";
    out += "config " + key + " = " + f.value + " (" + src + ")\n";
  }
  return out;
}

}  // namespace niaque
