#include "cibm/probe.hpp"

#include <algorithm>
#include <cmath>

#include "cibm/errors.hpp"

namespace cibm {

namespace {

void fit_standardizer(const std::vector<double>& x, int n, int f, std::vector<double>& mean,
                      std::vector<double>& sd) {
  mean.assign(static_cast<std::size_t>(f), 0.0);
  sd.assign(static_cast<std::size_t>(f), 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < f; ++j) mean[static_cast<std::size_t>(j)] += x[static_cast<std::size_t>(i) * f + j];
  for (auto& m : mean) m /= static_cast<double>(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < f; ++j) {
      const double d = x[static_cast<std::size_t>(i) * f + j] - mean[static_cast<std::size_t>(j)];
      sd[static_cast<std::size_t>(j)] += d * d;
    }
  for (auto& s : sd) s = std::sqrt(s / static_cast<double>(n));
  for (auto& s : sd)
    if (s < 1e-12) s = 1.0;  // constant feature
}

inline double standardized(const double* row, const std::vector<double>& mean,
                           const std::vector<double>& sd, int j) {
  return (row[j] - mean[static_cast<std::size_t>(j)]) / sd[static_cast<std::size_t>(j)];
}

}  // namespace

double BinaryProbe::score(const double* row) const {
  double acc = b;
  for (int j = 0; j < features; ++j) acc += w[static_cast<std::size_t>(j)] * standardized(row, mean, sd, j);
  return acc;
}

BinaryProbe train_binary_probe(const std::vector<double>& x, int n, int features,
                               const std::vector<uint8_t>& y, int iters, double lr) {
  if (n <= 0 || static_cast<int>(y.size()) != n)
    throw validation_error("train_binary_probe: bad sizes");
  BinaryProbe p;
  p.features = features;
  p.w.assign(static_cast<std::size_t>(features), 0.0);
  fit_standardizer(x, n, features, p.mean, p.sd);

  std::vector<double> gw(static_cast<std::size_t>(features));
  const double inv_n = 1.0 / static_cast<double>(n);
  for (int it = 0; it < iters; ++it) {
    std::fill(gw.begin(), gw.end(), 0.0);
    double gb = 0.0;
    for (int i = 0; i < n; ++i) {
      const double* row = x.data() + static_cast<std::size_t>(i) * features;
      const double z = p.score(row);
      const double s = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
      const double err = (s - static_cast<double>(y[static_cast<std::size_t>(i)])) * inv_n;
      for (int j = 0; j < features; ++j) gw[static_cast<std::size_t>(j)] += err * standardized(row, p.mean, p.sd, j);
      gb += err;
    }
    for (int j = 0; j < features; ++j) p.w[static_cast<std::size_t>(j)] -= lr * gw[static_cast<std::size_t>(j)];
    p.b -= lr * gb;
  }
  return p;
}

int SoftmaxProbe::predict(const double* row) const {
  int best = 0;
  double best_v = -HUGE_VAL;
  for (int c = 0; c < classes; ++c) {
    double acc = b[static_cast<std::size_t>(c)];
    for (int j = 0; j < features; ++j)
      acc += w[static_cast<std::size_t>(c) * features + j] * standardized(row, mean, sd, j);
    if (acc > best_v) {
      best_v = acc;
      best = c;
    }
  }
  return best;
}

SoftmaxProbe train_softmax_probe(const std::vector<double>& x, int n, int features,
                                 const std::vector<int>& y, int classes, int iters,
                                 double lr) {
  if (n <= 0 || static_cast<int>(y.size()) != n)
    throw validation_error("train_softmax_probe: bad sizes");
  SoftmaxProbe p;
  p.features = features;
  p.classes = classes;
  p.w.assign(static_cast<std::size_t>(classes) * features, 0.0);
  p.b.assign(static_cast<std::size_t>(classes), 0.0);
  fit_standardizer(x, n, features, p.mean, p.sd);

  std::vector<double> logits(static_cast<std::size_t>(classes));
  std::vector<double> gw(p.w.size());
  std::vector<double> gb(p.b.size());
  std::vector<double> xs(static_cast<std::size_t>(features));
  const double inv_n = 1.0 / static_cast<double>(n);
  for (int it = 0; it < iters; ++it) {
    std::fill(gw.begin(), gw.end(), 0.0);
    std::fill(gb.begin(), gb.end(), 0.0);
    for (int i = 0; i < n; ++i) {
      const double* row = x.data() + static_cast<std::size_t>(i) * features;
      for (int j = 0; j < features; ++j) xs[static_cast<std::size_t>(j)] = standardized(row, p.mean, p.sd, j);
      double mx = -HUGE_VAL;
      for (int c = 0; c < classes; ++c) {
        double acc = p.b[static_cast<std::size_t>(c)];
        for (int j = 0; j < features; ++j) acc += p.w[static_cast<std::size_t>(c) * features + j] * xs[static_cast<std::size_t>(j)];
        logits[static_cast<std::size_t>(c)] = acc;
        mx = std::max(mx, acc);
      }
      double se = 0.0;
      for (int c = 0; c < classes; ++c) se += std::exp(logits[static_cast<std::size_t>(c)] - mx);
      for (int c = 0; c < classes; ++c) {
        double err = std::exp(logits[static_cast<std::size_t>(c)] - mx) / se;
        if (c == y[static_cast<std::size_t>(i)]) err -= 1.0;
        err *= inv_n;
        gb[static_cast<std::size_t>(c)] += err;
        for (int j = 0; j < features; ++j) gw[static_cast<std::size_t>(c) * features + j] += err * xs[static_cast<std::size_t>(j)];
      }
    }
    for (std::size_t j = 0; j < p.w.size(); ++j) p.w[j] -= lr * gw[j];
    for (std::size_t j = 0; j < p.b.size(); ++j) p.b[j] -= lr * gb[j];
  }
  return p;
}

double softmax_probe_accuracy(const SoftmaxProbe& p, const std::vector<double>& x, int n,
                              const std::vector<int>& y) {
  int hits = 0;
  for (int i = 0; i < n; ++i)
    if (p.predict(x.data() + static_cast<std::size_t>(i) * p.features) == y[static_cast<std::size_t>(i)]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(n);
}

}  // namespace cibm
