// Copyright 2026 The niaque Authors.
// SPDX-License-Identifier: Apache-2.0

// Straight-line transliteration of the encoder/decoder equations for a single
// observation, written with plain loops over std::vector. It shares nothing
// with the library's kernels or tape and serves as the test oracle.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "niaque/model.hpp"

namespace niaque::reference {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;  // row-major, Mat[i] is a row

inline Mat param_matrix(const ParamStore& store, const std::string& name) {
  const Tensor& t = store.at(name).value;
  const Index rows = t.rank() == 1 ? 1 : t.shape()[0];
  const Index cols = t.shape().back();
  Mat m(static_cast<std::size_t>(rows), Vec(static_cast<std::size_t>(cols)));
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m[std::size_t(i)][std::size_t(j)] = t.data()[i * cols + j];
  return m;
}

inline Vec param_vector(const ParamStore& store, const std::string& name) {
  return param_matrix(store, name)[0];
}

// y = x W (+ b)
inline Vec affine(const Vec& x, const Mat& w, const Vec* b = nullptr) {
  Vec y(w[0].size(), 0.0);
  for (std::size_t j = 0; j < y.size(); ++j) {
    double acc = b ? (*b)[j] : 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) acc += x[k] * w[k][j];
    y[j] = acc;
  }
  return y;
}

inline Vec relu(Vec v) {
  for (double& x : v) x = x > 0 ? x : 0.0;
  return v;
}

inline Vec fc(const ParamStore& s, const std::string& name, const Vec& x) {
  const Vec b = param_vector(s, name + ".bias");
  return relu(affine(x, param_matrix(s, name + ".weight"), &b));
}

inline std::string blk(const char* part, int r) { return std::string(part) + "." + std::to_string(r); }

/// p_R for one row.
inline Vec encode_row(const NiaqueModel& model, const FeatureRow& row) {
  const NiaqueConfig& c = model.config();
  const ParamStore& s = model.params();
  const Mat emb = param_matrix(s, "embedding");
  const std::size_t d = row.feature_ids.size();

  Mat x_in(d);
  for (std::size_t i = 0; i < d; ++i) {
    x_in[i] = emb[std::size_t(row.feature_ids[i])];
    const double v = row.values[i];
    x_in[i].push_back(std::log(std::abs(v) + 1.0) * (v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0)));
  }

  Mat b = x_in;
  Vec p(std::size_t(c.latent_dim), 0.0);
  for (int r = 1; r <= c.blocks; ++r) {
    Mat f(d);
    Mat next_b(d);
    for (std::size_t i = 0; i < d; ++i) {
      Vec x = x_in[i];
      if (r > 1) {
        x = b[i];
        for (std::size_t j = 0; j < x.size(); ++j) x[j] -= p[j] / double(r - 1);
        x = relu(x);
      }
      Vec h = x;
      for (int l = 1; l <= c.layers_per_block; ++l) {
        h = fc(s, blk("encoder", r) + ".fc" + std::to_string(l), h);
      }
      Vec skip = affine(x, param_matrix(s, blk("encoder", r) + ".skip"));
      for (std::size_t j = 0; j < skip.size(); ++j) skip[j] += h[j];
      next_b[i] = relu(skip);
      f[i] = affine(h, param_matrix(s, blk("encoder", r) + ".proj"));
    }
    for (std::size_t j = 0; j < p.size(); ++j) {
      double mean = 0.0;
      for (std::size_t i = 0; i < d; ++i) mean += f[i][j];
      p[j] += mean / double(d);
    }
    b = next_b;
  }
  return p;
}

/// yhat_q for one observation embedding and one level.
inline double decode_one(const NiaqueModel& model, const Vec& observation, double q) {
  const NiaqueConfig& c = model.config();
  const ParamStore& s = model.params();
  Vec b = observation;
  Vec y(std::size_t(c.latent_dim), 0.0);
  for (int r = 1; r <= c.blocks; ++r) {
    const std::string name = blk("decoder", r);
    Vec h = fc(s, name + ".fc1", b);
    const Vec film_b = param_vector(s, name + ".film.bias");
    const Vec gb = affine(Vec{q}, param_matrix(s, name + ".film.weight"), &film_b);
    const std::size_t w = h.size();
    for (std::size_t j = 0; j < w; ++j) h[j] = (1.0 + gb[j]) * h[j] + gb[w + j];
    for (int l = 2; l <= c.layers_per_block; ++l) h = fc(s, name + ".fc" + std::to_string(l), h);
    Vec skip = affine(b, param_matrix(s, name + ".skip"));
    for (std::size_t j = 0; j < skip.size(); ++j) skip[j] += h[j];
    b = relu(skip);
    const Vec step = affine(h, param_matrix(s, name + ".proj"));
    for (std::size_t j = 0; j < y.size(); ++j) y[j] += step[j];
  }
  const Vec out_b = param_vector(s, "output.bias");
  return affine(y, param_matrix(s, "output.weight"), &out_b)[0];
}

}  // namespace niaque::reference
