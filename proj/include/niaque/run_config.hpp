// Copyright 2026 The niaque Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "niaque/data.hpp"
#include "niaque/model.hpp"
#include "niaque/trainer.hpp"

namespace niaque {

/// Merged model, training and data settings with the origin of each value.
///
/// Files use `key = value` lines grouped under `[model]`, `[train]` and
/// `[data]` sections; `#` starts a comment. Keys are addressed as
/// `section.key` and every key must already exist with a default.
class RunConfig {
 public:
  enum class Source { default_value, file, flag };

  RunConfig();

  /// Throws std::invalid_argument on unknown keys or malformed lines.
  void load_text(std::string_view text, const std::string& origin = "config");
  void load_file(const std::filesystem::path& path);
  void set(const std::string& key, const std::string& value, Source source = Source::flag);
  /// `section.key=value`.
  void set_assignment(const std::string& assignment, Source source = Source::flag);

  const std::string& get(const std::string& key) const;
  Source source(const std::string& key) const;

  NiaqueConfig model() const;
  TrainConfig training() const;
  IngestOptions ingest() const;

  /// One `config <key> = <value> (<source>)` line per field.
  std::string provenance() const;

 private:
  struct Field {
    std::string value;
    Source source;
  };
  std::map<std::string, Field> fields_;
};

}  // namespace niaque
