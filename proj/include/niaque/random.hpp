// Copyright 2026 The niaque Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <string_view>

namespace niaque {

using Rng = std::mt19937_64;

/// Engine for the named sub-stream `name` of a run seeded with `seed`.
inline Rng make_stream(std::uint64_t seed, std::string_view name) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char c : name) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32),
                    std::uint32_t(h), std::uint32_t(h >> 32)};
  return Rng(seq);
}

/// Uniform draw from the open interval (0, 1).
inline double uniform_open(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double v = 0.0;
  while (v <= 0.0) v = u(rng);
  return v;
}

inline std::string rng_state(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

inline void restore_rng(Rng& rng, const std::string& state) {
  std::istringstream is(state);
  is >> rng;
}

/// The independent randomness sources of a training run.
struct RngStreams {
  Rng data;
  Rng init;
  Rng dropout;
  Rng quantiles;

  static RngStreams from_seed(std::uint64_t seed) {
    return {make_stream(seed, "data"), make_stream(seed, "init"),
            make_stream(seed, "dropout"), make_stream(seed, "quantiles")};
  }
};

}  // namespace niaque
