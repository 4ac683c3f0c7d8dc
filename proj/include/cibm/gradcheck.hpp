#pragma once

#include <functional>
#include <vector>

#include "cibm/graph.hpp"

namespace cibm {

// Builds a scalar loss from leaf nodes wrapping the given parameter tensors.
// Must be deterministic: any noise (eps draws) is captured by the closure.
using GraphBuilder = std::function<NodePtr(const std::vector<NodePtr>&)>;

// Central-difference check of reverse-mode gradients, coordinate by
// coordinate. Returns the max relative error over all parameter entries;
// coordinates where both gradients are below 1e-7 in magnitude count as 0.
double grad_check(const GraphBuilder& f, std::vector<Tensor> params, double eps = 1e-5);

}  // namespace cibm
