#pragma once

#include <cstdint>
#include <vector>

namespace cibm {

// Deterministic single-layer probes trained by full-batch gradient descent on
// standardized features (zero init, so no RNG enters the optimization).

struct BinaryProbe {
  int features = 0;
  std::vector<double> w;
  double b = 0.0;
  std::vector<double> mean, sd;  // feature standardization

  double score(const double* row) const;  // logit
};

BinaryProbe train_binary_probe(const std::vector<double>& x, int n, int features,
                               const std::vector<uint8_t>& y, int iters = 200,
                               double lr = 0.05);

struct SoftmaxProbe {
  int features = 0;
  int classes = 0;
  std::vector<double> w;  // classes x features
  std::vector<double> b;
  std::vector<double> mean, sd;

  int predict(const double* row) const;
};

SoftmaxProbe train_softmax_probe(const std::vector<double>& x, int n, int features,
                                 const std::vector<int>& y, int classes, int iters = 400,
                                 double lr = 0.5);

double softmax_probe_accuracy(const SoftmaxProbe& p, const std::vector<double>& x, int n,
                              const std::vector<int>& y);

}  // namespace cibm
