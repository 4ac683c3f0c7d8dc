#pragma once

#include "cibm/rng.hpp"
#include "cibm/tensor.hpp"

namespace cibm::testutil {

inline Tensor random_tensor(const std::vector<int>& shape, RngStream& rng, double scale = 1.0) {
  Tensor t = Tensor::zeros(shape);
  for (auto& v : t.data) v = scale * rng.normal();
  return t;
}

inline Tensor random_binary(const std::vector<int>& shape, RngStream& rng, double p = 0.5) {
  Tensor t = Tensor::zeros(shape);
  for (auto& v : t.data) v = rng.bernoulli(p) ? 1.0 : 0.0;
  return t;
}

}  // namespace cibm::testutil
