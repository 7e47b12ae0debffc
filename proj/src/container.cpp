// Copyright 2026 The niaque Authors.
// SPDX-License-Identifier: Apache-2.0

#include "niaque/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "niaque/errors.hpp"

namespace niaque {

static_assert(std::endian::native == std::endian::little,
              "container payloads are written in host order");

namespace {

constexpr char kMagic[4] = {'N', 'I', 'A', 'Q'};

const char* dtype_name(Container::DType t) {
  switch (t) {
    case Container::DType::f32: return "f32";
    case Container::DType::f64: return "f64";
    case Container::DType::i64: return "i64";
  }
  return "?";
}

Container::DType dtype_from(const std::string& s) {
  if (s == "f32") return Container::DType::f32;
  if (s == "f64") return Container::DType::f64;
  if (s == "i64") return Container::DType::i64;
  throw FormatError("container: unknown dtype '" + s + "'");
}

std::size_t element_size(Container::DType t) { return t == Container::DType::f32 ? 4 : 8; }

Index shape_size(const Shape& shape) {
  Index n = 1;
  for (Index d : shape) {
    if (d < 1) throw DimensionError("container: bad shape " + shape_string(shape));
    n *= d;
  }
  return n;
}

template <typename T>
std::vector<unsigned char> to_bytes(std::span<const T> values) {
  std::vector<unsigned char> out(values.size_bytes());
  if (!out.empty()) std::memcpy(out.data(), values.data(), out.size());
  return out;
}

std::size_t align8(std::size_t n) { return (n + 7) & ~std::size_t(7); }

}  // namespace

void Container::put_f32(const std::string& name, Shape shape, std::span<const double> values) {
  if (shape_size(shape) != Index(values.size())) {
    throw DimensionError("container: '" + name + "' size does not match its shape");
  }
  std::vector<float> narrow(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) narrow[i] = float(values[i]);
  if (!entries_.count(name)) order_.push_back(name);
  entries_[name] = Entry{std::move(shape), DType::f32, to_bytes(std::span<const float>(narrow))};
}

void Container::put_f64(const std::string& name, Shape shape, std::span<const double> values) {
  if (shape_size(shape) != Index(values.size())) {
    throw DimensionError("container: '" + name + "' size does not match its shape");
  }
  if (!entries_.count(name)) order_.push_back(name);
  entries_[name] = Entry{std::move(shape), DType::f64, to_bytes(values)};
}

void Container::put_i64(const std::string& name, Shape shape,
                        std::span<const std::int64_t> values) {
  if (shape_size(shape) != Index(values.size())) {
    throw DimensionError("container: '" + name + "' size does not match its shape");
  }
  if (!entries_.count(name)) order_.push_back(name);
  entries_[name] = Entry{std::move(shape), DType::i64, to_bytes(values)};
}

const Container::Entry& Container::entry(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw FormatError("container: missing tensor '" + name + "'");
  return it->second;
}

Container::DType Container::dtype(const std::string& name) const { return entry(name).dtype; }
Shape Container::shape(const std::string& name) const { return entry(name).shape; }

std::vector<std::string> Container::names() const { return order_; }

Tensor Container::tensor(const std::string& name) const {
  const Entry& e = entry(name);
  Tensor out(e.shape);
  const std::size_t n = std::size_t(out.size());
  if (e.dtype == DType::f32) {
    std::vector<float> tmp(n);
    std::memcpy(tmp.data(), e.bytes.data(), n * 4);
    for (std::size_t i = 0; i < n; ++i) out.data()[i] = double(tmp[i]);
  } else if (e.dtype == DType::f64) {
    std::memcpy(out.data(), e.bytes.data(), n * 8);
  } else {
    throw FormatError("container: '" + name + "' holds integers");
  }
  return out;
}

std::vector<std::int64_t> Container::integers(const std::string& name) const {
  const Entry& e = entry(name);
  if (e.dtype != DType::i64) throw FormatError("container: '" + name + "' is not i64");
  std::vector<std::int64_t> out(e.bytes.size() / 8);
  if (!out.empty()) std::memcpy(out.data(), e.bytes.data(), e.bytes.size());
  return out;
}

std::string Container::serialize() const {
  nlohmann::json table = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& name : order_) {
    const Entry& e = entries_.at(name);
    table.push_back({{"name", name},
                     {"shape", e.shape},
                     {"dtype", dtype_name(e.dtype)},
                     {"offset", offset},
                     {"nbytes", e.bytes.size()}});
    offset = align8(offset + e.bytes.size());
  }
  nlohmann::json header = {{"meta", meta_}, {"tensors", table}};
  std::string text = header.dump();

  std::string out(kMagic, 4);
  const std::uint32_t version = kVersion;
  const std::uint64_t length = text.size();
  out.append(reinterpret_cast<const char*>(&version), 4);
  out.append(reinterpret_cast<const char*>(&length), 8);
  out += text;
  out.resize(align8(out.size()), '\0');
  const std::size_t base = out.size();
  for (const auto& name : order_) {
    const Entry& e = entries_.at(name);
    out.append(reinterpret_cast<const char*>(e.bytes.data()), e.bytes.size());
    out.resize(base + align8(out.size() - base), '\0');
  }
  return out;
}

Container Container::parse(const std::string& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("container: bad magic bytes");
  }
  std::uint32_t version = 0;
  std::uint64_t length = 0;
  std::memcpy(&version, bytes.data() + 4, 4);
  std::memcpy(&length, bytes.data() + 8, 8);
  if (version != kVersion) {
    throw FormatError("container: unsupported version " + std::to_string(version));
  }
  if (length > bytes.size() - 16) throw FormatError("container: truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(16, length));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("container: bad header: ") + e.what());
  }
  Container c;
  c.meta_ = header.value("meta", nlohmann::json::object());
  const std::size_t base = align8(16 + length);
  try {
    for (const auto& t : header.at("tensors")) {
      Entry e;
      e.shape = t.at("shape").get<Shape>();
      e.dtype = dtype_from(t.at("dtype").get<std::string>());
      const auto offset = t.at("offset").get<std::size_t>();
      const auto nbytes = t.at("nbytes").get<std::size_t>();
      const auto name = t.at("name").get<std::string>();
      if (std::size_t(shape_size(e.shape)) * element_size(e.dtype) != nbytes ||
          offset % 8 != 0 || base + offset + nbytes > bytes.size()) {
        throw FormatError("container: inconsistent entry '" + name + "'");
      }
      e.bytes.assign(bytes.begin() + std::ptrdiff_t(base + offset),
                     bytes.begin() + std::ptrdiff_t(base + offset + nbytes));
      c.order_.push_back(name);
      c.entries_[name] = std::move(e);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("container: bad tensor table: ") + e.what());
  }
  return c;
}

void Container::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  const std::string bytes = serialize();
  out.write(bytes.data(), std::streamsize(bytes.size()));
  if (!out) throw DataError("short write to '" + path.string() + "'");
}

Container Container::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

}  // namespace niaque
