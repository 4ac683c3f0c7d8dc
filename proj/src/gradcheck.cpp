#include "cibm/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace cibm {

namespace {

double eval_loss(const GraphBuilder& f, const std::vector<Tensor>& params) {
  std::vector<NodePtr> leaves;
  leaves.reserve(params.size());
  for (const Tensor& p : params) leaves.push_back(leaf(p));
  return f(leaves)->value.data[0];
}

}  // namespace

double grad_check(const GraphBuilder& f, std::vector<Tensor> params, double eps) {
  std::vector<NodePtr> leaves;
  leaves.reserve(params.size());
  for (const Tensor& p : params) leaves.push_back(leaf(p));
  NodePtr loss = f(leaves);
  backward(loss);

  double max_rel = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    for (std::size_t i = 0; i < params[pi].size(); ++i) {
      const double saved = params[pi].data[i];
      params[pi].data[i] = saved + eps;
      const double fp = eval_loss(f, params);
      params[pi].data[i] = saved - eps;
      const double fm = eval_loss(f, params);
      params[pi].data[i] = saved;

      const double fd = (fp - fm) / (2.0 * eps);
      const double an = leaves[pi]->grad.data[i];
      const double denom = std::max(std::abs(fd), std::abs(an));
      if (denom < 1e-7) continue;
      max_rel = std::max(max_rel, std::abs(fd - an) / denom);
    }
  }
  return max_rel;
}

}  // namespace cibm
