// Copyright 2026 The niaque Authors.
// SPDX-License-Identifier: Apache-2.0

#include "niaque/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "niaque/random.hpp"

namespace niaque {

namespace {

void require_quantile(double q) {
  if (!(q > 0.0 && q < 1.0)) {
    throw DomainError("quantile level " + std::to_string(q) + " outside (0, 1)");
  }
}

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": length " + std::to_string(a) +
                         " vs " + std::to_string(b));
  }
}

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

double pinball(double y, double yhat, double q) {
  require_quantile(q);
  return (y - yhat) * (q - (y <= yhat ? 1.0 : 0.0));
}

double crps_sample(std::span<const double> y, const Tensor& yhat,
                   std::span<const double> quantiles) {
  if (quantiles.empty() || y.empty() || yhat.rows() != Index(y.size()) ||
      yhat.cols() != Index(quantiles.size())) {
    throw DimensionError("crps_sample: predictions " + shape_string(yhat.shape()) +
                         " for " + std::to_string(y.size()) + " targets and " +
                         std::to_string(quantiles.size()) + " quantiles");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    for (std::size_t j = 0; j < quantiles.size(); ++j) {
      total += pinball(y[i], yhat(Index(i), Index(j)), quantiles[j]);
    }
  }
  return 2.0 * total / (double(y.size()) * double(quantiles.size()));
}

PointMetrics point_metrics(std::span<const double> y,
                           std::span<const double> median) {
  require_same_length(y.size(), median.size(), "point_metrics");
  if (y.empty()) throw DimensionError("point_metrics: no samples");
  PointMetrics m;
  double smape = 0, aad = 0, bias = 0, sq = 0, sqlog = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double err = y[i] - median[i];
    const double denom = std::abs(y[i]) + std::abs(median[i]);
    if (denom > 0) smape += std::abs(err) / denom;
    aad += std::abs(err);
    bias += median[i] - y[i];
    sq += err * err;
    if (y[i] <= -1.0 || median[i] <= -1.0) {
      throw DomainError("rmsle: value <= -1 at sample " + std::to_string(i));
    }
    const double dl = std::log1p(y[i]) - std::log1p(median[i]);
    sqlog += dl * dl;
  }
  const double s = double(y.size());
  m.smape = 200.0 * smape / s;
  m.aad = aad / s;
  m.bias = bias / s;
  m.rmse = std::sqrt(sq / s);
  m.rmsle = std::sqrt(sqlog / s);
  return m;
}

double coverage(std::span<const double> y, std::span<const double> low,
                std::span<const double> high) {
  require_same_length(y.size(), low.size(), "coverage");
  require_same_length(y.size(), high.size(), "coverage");
  if (y.empty()) return 0.0;
  std::size_t inside = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] > low[i] && y[i] < high[i]) ++inside;
  }
  return 100.0 * double(inside) / double(y.size());
}

std::string MetricReport::to_text(const std::string& prefix) const {
  std::ostringstream os;
  auto line = [&](const std::string& name, double v) {
    os << prefix << name << '=' << format_value(v) << '\n';
  };
  line("smape", smape);
  line("aad", aad);
  line("bias", bias);
  line("rmse", rmse);
  line("rmsle", rmsle);
  line("crps", crps);
  for (const auto& [level, pct] : coverage_at) {
    line("coverage@" + format_value(100.0 * level), pct);
  }
  return os.str();
}

std::map<std::string, double> parse_metric_text(const std::string& text) {
  std::map<std::string, double> out;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError("metric line without '=': " + line);
    }
    out[line.substr(0, eq)] = std::stod(line.substr(eq + 1));
  }
  return out;
}

std::vector<double> evaluation_quantiles(int count, std::uint64_t seed) {
  if (count < 1) throw DomainError("evaluation_quantiles: count must be >= 1");
  Rng rng = make_stream(seed, "evaluation-quantiles");
  std::vector<double> q(static_cast<std::size_t>(count));
  for (auto& v : q) v = uniform_open(rng);
  return q;
}

}  // namespace niaque
