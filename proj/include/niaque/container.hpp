// Copyright 2026 The niaque Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "niaque/tensor.hpp"

namespace niaque {

/// Binary container used for checkpoints and ingested datasets.
///
/// Layout: the magic bytes "NIAQ", a u32 format version, a u64 header
/// length, the UTF-8 JSON header, then 8-byte aligned little-endian
/// payloads. The header carries arbitrary metadata under "meta" and a
/// "tensors" table of {name, shape, dtype, offset, nbytes}; offsets are
/// relative to the start of the payload area.
class Container {
 public:
  static constexpr std::uint32_t kVersion = 1;
  enum class DType { f32, f64, i64 };

  nlohmann::json& meta() { return meta_; }
  const nlohmann::json& meta() const { return meta_; }

  /// Stores `values` rounded to 32-bit floats.
  void put_f32(const std::string& name, Shape shape, std::span<const double> values);
  void put_f64(const std::string& name, Shape shape, std::span<const double> values);
  void put_i64(const std::string& name, Shape shape, std::span<const std::int64_t> values);
  void put_f64(const std::string& name, const Tensor& t) { put_f64(name, t.shape(), t.values()); }

  bool contains(const std::string& name) const { return entries_.count(name) > 0; }
  DType dtype(const std::string& name) const;
  Shape shape(const std::string& name) const;
  /// Any floating dtype widened to double.
  Tensor tensor(const std::string& name) const;
  std::vector<std::int64_t> integers(const std::string& name) const;
  std::vector<std::string> names() const;

  std::string serialize() const;
  static Container parse(const std::string& bytes);

  void save(const std::filesystem::path& path) const;
  static Container load(const std::filesystem::path& path);

 private:
  struct Entry {
    Shape shape;
    DType dtype;
    std::vector<unsigned char> bytes;
  };
  const Entry& entry(const std::string& name) const;

  nlohmann::json meta_ = nlohmann::json::object();
  std::vector<std::string> order_;
  std::map<std::string, Entry> entries_;
};

}  // namespace niaque
