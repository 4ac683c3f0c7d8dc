#include "cibm/adam.hpp"

#include <cmath>

#include "cibm/errors.hpp"

namespace cibm {

AdamState::AdamState(const std::vector<Tensor*>& params, AdamConfig c) : cfg(c) {
  m.reserve(params.size());
  v.reserve(params.size());
  for (const Tensor* p : params) {
    m.push_back(Tensor::zeros(p->shape));
    v.push_back(Tensor::zeros(p->shape));
  }
}

void adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw contract_error("adam_step: parameter/gradient/state counts differ");

  double clip_scale = 1.0;
  if (state.cfg.clip_norm > 0.0) {
    double sq = 0.0;
    for (const Tensor* g : grads)
      for (double v : g->data) sq += v * v;
    const double norm = std::sqrt(sq);
    if (norm > state.cfg.clip_norm) clip_scale = state.cfg.clip_norm / norm;
  }

  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.cfg.beta2, static_cast<double>(state.step));

  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& p = *params[pi];
    const Tensor& g = *grads[pi];
    if (!p.same_shape(g))
      throw dim_error("adam_step: gradient shape " + shape_str(g.shape) +
                      " does not match parameter " + shape_str(p.shape));
    Tensor& m = state.m[pi];
    Tensor& v = state.v[pi];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g.data[i] * clip_scale;
      m.data[i] = state.cfg.beta1 * m.data[i] + (1.0 - state.cfg.beta1) * gi;
      v.data[i] = state.cfg.beta2 * v.data[i] + (1.0 - state.cfg.beta2) * gi * gi;
      const double mhat = m.data[i] / bc1;
      const double vhat = v.data[i] / bc2;
      p.data[i] -= state.cfg.lr * (mhat / (std::sqrt(vhat) + state.cfg.eps) +
                                   state.cfg.wd * p.data[i]);
    }
  }
}

}  // namespace cibm
