#include "cibm/graph.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "cibm/errors.hpp"

namespace cibm {

namespace {

NodePtr make_node(Tensor value, std::vector<NodePtr> parents,
                  std::function<void(Node&)> backprop) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->parents = std::move(parents);
  n->backprop = std::move(backprop);
  return n;
}

void require_same_shape(const NodePtr& a, const NodePtr& b, const char* op) {
  if (!a->value.same_shape(b->value))
    throw dim_error(std::string(op) + ": shapes " + shape_str(a->value.shape) + " and " +
                    shape_str(b->value.shape) + " differ");
}

}  // namespace

NodePtr leaf(Tensor value) { return make_node(std::move(value), {}, nullptr); }

NodePtr dense(const NodePtr& w, const NodePtr& b, const NodePtr& x) {
  Tensor y = dense_fwd(x->value, w->value, b->value);
  return make_node(std::move(y), {w, b, x}, [](Node& self) {
    const Tensor& gy = self.grad;
    Node& w = *self.parents[0];
    Node& b = *self.parents[1];
    Node& x = *self.parents[2];
    const int m = w.value.dim(0);
    const int n = w.value.dim(1);
    const int batch = x.value.rows();
    for (int r = 0; r < batch; ++r) {
      const double* gyr = gy.data.data() + static_cast<std::size_t>(r) * m;
      const double* xr = x.value.data.data() + static_cast<std::size_t>(r) * n;
      double* gxr = x.grad.data.data() + static_cast<std::size_t>(r) * n;
      for (int i = 0; i < m; ++i) {
        const double g = gyr[i];
        if (g == 0.0) continue;
        const double* wi = w.value.data.data() + static_cast<std::size_t>(i) * n;
        double* gwi = w.grad.data.data() + static_cast<std::size_t>(i) * n;
        b.grad.at(i) += g;
        for (int j = 0; j < n; ++j) {
          gwi[j] += g * xr[j];
          gxr[j] += g * wi[j];
        }
      }
    }
  });
}

NodePtr relu(const NodePtr& x) {
  return make_node(relu_fwd(x->value), {x}, [](Node& self) {
    Node& x = *self.parents[0];
    for (std::size_t i = 0; i < x.value.size(); ++i)
      if (x.value.data[i] > 0.0) x.grad.data[i] += self.grad.data[i];
  });
}

NodePtr sigmoid(const NodePtr& x) {
  Tensor y = sigmoid_fwd(x->value);
  return make_node(std::move(y), {x}, [](Node& self) {
    Node& x = *self.parents[0];
    for (std::size_t i = 0; i < x.value.size(); ++i) {
      const double s = self.value.data[i];
      x.grad.data[i] += self.grad.data[i] * s * (1.0 - s);
    }
  });
}

NodePtr expv(const NodePtr& x) {
  return make_node(exp_fwd(x->value), {x}, [](Node& self) {
    Node& x = *self.parents[0];
    for (std::size_t i = 0; i < x.value.size(); ++i)
      x.grad.data[i] += self.grad.data[i] * self.value.data[i];
  });
}

NodePtr add(const NodePtr& a, const NodePtr& b) {
  require_same_shape(a, b, "add");
  Tensor y = a->value;
  for (std::size_t i = 0; i < y.size(); ++i) y.data[i] += b->value.data[i];
  return make_node(std::move(y), {a, b}, [](Node& self) {
    for (int p = 0; p < 2; ++p) {
      Node& t = *self.parents[p];
      for (std::size_t i = 0; i < t.value.size(); ++i) t.grad.data[i] += self.grad.data[i];
    }
  });
}

NodePtr sub(const NodePtr& a, const NodePtr& b) {
  require_same_shape(a, b, "sub");
  Tensor y = a->value;
  for (std::size_t i = 0; i < y.size(); ++i) y.data[i] -= b->value.data[i];
  return make_node(std::move(y), {a, b}, [](Node& self) {
    Node& a = *self.parents[0];
    Node& b = *self.parents[1];
    for (std::size_t i = 0; i < a.value.size(); ++i) {
      a.grad.data[i] += self.grad.data[i];
      b.grad.data[i] -= self.grad.data[i];
    }
  });
}

NodePtr mul(const NodePtr& a, const NodePtr& b) {
  require_same_shape(a, b, "mul");
  Tensor y = a->value;
  for (std::size_t i = 0; i < y.size(); ++i) y.data[i] *= b->value.data[i];
  return make_node(std::move(y), {a, b}, [](Node& self) {
    Node& a = *self.parents[0];
    Node& b = *self.parents[1];
    for (std::size_t i = 0; i < a.value.size(); ++i) {
      a.grad.data[i] += self.grad.data[i] * b.value.data[i];
      b.grad.data[i] += self.grad.data[i] * a.value.data[i];
    }
  });
}

NodePtr scale(const NodePtr& x, double s) {
  Tensor y = x->value;
  for (auto& v : y.data) v *= s;
  return make_node(std::move(y), {x}, [s](Node& self) {
    Node& x = *self.parents[0];
    for (std::size_t i = 0; i < x.value.size(); ++i) x.grad.data[i] += s * self.grad.data[i];
  });
}

NodePtr mul_const(const NodePtr& x, const Tensor& c) {
  if (!x->value.same_shape(c))
    throw dim_error("mul_const: shapes " + shape_str(x->value.shape) + " and " +
                    shape_str(c.shape) + " differ");
  Tensor y = x->value;
  for (std::size_t i = 0; i < y.size(); ++i) y.data[i] *= c.data[i];
  return make_node(std::move(y), {x}, [c](Node& self) {
    Node& x = *self.parents[0];
    for (std::size_t i = 0; i < x.value.size(); ++i)
      x.grad.data[i] += self.grad.data[i] * c.data[i];
  });
}

NodePtr sum(const NodePtr& x) {
  double acc = 0.0;
  for (double v : x->value.data) acc += v;
  return make_node(Tensor::scalar(acc), {x}, [](Node& self) {
    Node& x = *self.parents[0];
    const double g = self.grad.data[0];
    for (auto& v : x.grad.data) v += g;
  });
}

NodePtr mean(const NodePtr& x) {
  if (x->value.size() == 0) throw dim_error("mean: empty tensor");
  double acc = 0.0;
  for (double v : x->value.data) acc += v;
  const double inv = 1.0 / static_cast<double>(x->value.size());
  return make_node(Tensor::scalar(acc * inv), {x}, [inv](Node& self) {
    Node& x = *self.parents[0];
    const double g = self.grad.data[0] * inv;
    for (auto& v : x.grad.data) v += g;
  });
}

NodePtr bce_with_logits(const NodePtr& logits, const Tensor& targets) {
  if (!logits->value.same_shape(targets))
    throw dim_error("bce_with_logits: logits " + shape_str(logits->value.shape) +
                    " vs targets " + shape_str(targets.shape));
  for (double t : targets.data)
    if (t != 0.0 && t != 1.0)
      throw validation_error("bce_with_logits: targets must be 0 or 1");
  const std::size_t n = targets.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double l = logits->value.data[i];
    const double t = targets.data[i];
    // max(l,0) - l*t + log(1 + exp(-|l|))
    acc += (l > 0.0 ? l : 0.0) - l * t + std::log1p(std::exp(-std::abs(l)));
  }
  const double inv = 1.0 / static_cast<double>(n);
  return make_node(Tensor::scalar(acc * inv), {logits}, [targets, inv](Node& self) {
    Node& x = *self.parents[0];
    const double g = self.grad.data[0] * inv;
    const Tensor s = sigmoid_fwd(x.value);
    for (std::size_t i = 0; i < x.value.size(); ++i)
      x.grad.data[i] += g * (s.data[i] - targets.data[i]);
  });
}

NodePtr softmax_cross_entropy(const NodePtr& logits, const std::vector<int>& labels) {
  const Tensor& l = logits->value;
  if (l.rank() != 2) throw dim_error("softmax_cross_entropy: logits must be [B x K]");
  const int batch = l.dim(0);
  const int k = l.dim(1);
  if (static_cast<int>(labels.size()) != batch)
    throw dim_error("softmax_cross_entropy: label count does not match batch");
  for (int lab : labels)
    if (lab < 0 || lab >= k)
      throw validation_error("softmax_cross_entropy: label " + std::to_string(lab) +
                             " out of range [0," + std::to_string(k) + ")");
  double acc = 0.0;
  for (int r = 0; r < batch; ++r) {
    const double* row = l.data.data() + static_cast<std::size_t>(r) * k;
    double mx = row[0];
    for (int j = 1; j < k; ++j) mx = std::max(mx, row[j]);
    double se = 0.0;
    for (int j = 0; j < k; ++j) se += std::exp(row[j] - mx);
    acc += mx + std::log(se) - row[labels[static_cast<std::size_t>(r)]];
  }
  const double inv = 1.0 / static_cast<double>(batch);
  return make_node(Tensor::scalar(acc * inv), {logits}, [labels, inv](Node& self) {
    Node& x = *self.parents[0];
    const int batch = x.value.dim(0);
    const int k = x.value.dim(1);
    const double g = self.grad.data[0] * inv;
    for (int r = 0; r < batch; ++r) {
      const double* row = x.value.data.data() + static_cast<std::size_t>(r) * k;
      double* grow = x.grad.data.data() + static_cast<std::size_t>(r) * k;
      double mx = row[0];
      for (int j = 1; j < k; ++j) mx = std::max(mx, row[j]);
      double se = 0.0;
      for (int j = 0; j < k; ++j) se += std::exp(row[j] - mx);
      for (int j = 0; j < k; ++j) grow[j] += g * std::exp(row[j] - mx) / se;
      grow[labels[static_cast<std::size_t>(r)]] -= g;
    }
  });
}

NodePtr reparam_sample(const NodePtr& mu, const NodePtr& log_sigma, const Tensor& eps) {
  require_same_shape(mu, log_sigma, "reparam_sample");
  if (!mu->value.same_shape(eps))
    throw dim_error("reparam_sample: eps shape " + shape_str(eps.shape) + " differs from mu " +
                    shape_str(mu->value.shape));
  return add(mu, mul_const(expv(log_sigma), eps));
}

NodePtr stop_gradient(const NodePtr& x) {
  auto n = make_node(x->value, {x}, nullptr);
  n->stop_grad = true;
  return n;
}

void backward(const NodePtr& loss) {
  if (!loss) throw contract_error("backward: null root");
  if (!loss->value.is_scalar())
    throw contract_error("backward: root must be scalar, got shape " +
                         shape_str(loss->value.shape));

  // iterative post-order DFS -> topological order
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(loss.get(), 0);
  seen.insert(loss.get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      Node* p = node->parents[idx++].get();
      if (seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* n : order) n->grad = Tensor::zeros(n->value.shape);
  loss->grad.data[0] = 1.0;

  // order is post-order (parents before children), so walk it backwards
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->stop_grad || !n->backprop) continue;
    n->backprop(*n);
  }
}

}  // namespace cibm
