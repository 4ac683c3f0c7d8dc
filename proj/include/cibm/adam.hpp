#pragma once

#include <vector>

#include "cibm/tensor.hpp"

namespace cibm {

struct AdamConfig {
  double lr = 0.003;
  double wd = 0.001;  // decoupled weight decay
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 0.0;  // 0 disables gradient clipping
};

// Per-parameter first/second moments, aligned with the parameter list.
struct AdamState {
  AdamConfig cfg;
  long step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;

  AdamState() = default;
  AdamState(const std::vector<Tensor*>& params, AdamConfig cfg);
};

// Standard Adam update with decoupled weight decay; increments the step
// counter. grads must be aligned with params.
void adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               AdamState& state);

}  // namespace cibm
