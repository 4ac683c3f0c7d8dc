#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "cibm/tensor.hpp"

namespace cibm {

// One vertex of a per-batch computation DAG. Values are immutable after the
// forward pass; backward() fills `grad` for every reachable node.
struct Node {
  Tensor value;
  Tensor grad;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;  // accumulates into parents' grads
  bool stop_grad = false;
};

using NodePtr = std::shared_ptr<Node>;

NodePtr leaf(Tensor value);

// y = x W^T + b per row; gradient flows to W, b and x.
NodePtr dense(const NodePtr& w, const NodePtr& b, const NodePtr& x);

NodePtr relu(const NodePtr& x);
NodePtr sigmoid(const NodePtr& x);
NodePtr expv(const NodePtr& x);

NodePtr add(const NodePtr& a, const NodePtr& b);
NodePtr sub(const NodePtr& a, const NodePtr& b);
NodePtr mul(const NodePtr& a, const NodePtr& b);
NodePtr scale(const NodePtr& x, double s);
NodePtr mul_const(const NodePtr& x, const Tensor& c);

NodePtr sum(const NodePtr& x);
NodePtr mean(const NodePtr& x);

// mean over all elements of -[t log s(l) + (1-t) log(1-s(l))], log-sum-exp form
NodePtr bce_with_logits(const NodePtr& logits, const Tensor& targets);

// mean over rows of -log softmax(logits)[label]
NodePtr softmax_cross_entropy(const NodePtr& logits, const std::vector<int>& labels);

// mu + exp(log_sigma) * eps; eps supplied by the caller, outside the graph
NodePtr reparam_sample(const NodePtr& mu, const NodePtr& log_sigma, const Tensor& eps);

// value passes through; backward contributes zero to ancestors of x
NodePtr stop_gradient(const NodePtr& x);

// Reverse topological sweep from a scalar root. Zeroes grads of every
// reachable node first; visits each node exactly once.
void backward(const NodePtr& loss);

}  // namespace cibm
