#include "cibm/tensor.hpp"

#include <cmath>
#include <sstream>

#include "cibm/errors.hpp"

namespace cibm {

std::size_t shape_size(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(std::vector<int> s, std::vector<double> d)
    : shape(std::move(s)), data(std::move(d)) {
  if (shape_size(shape) != data.size())
    throw dim_error("tensor data length " + std::to_string(data.size()) +
                    " does not match shape " + shape_str(shape));
}

Tensor Tensor::zeros(const std::vector<int>& shape) {
  Tensor t;
  t.shape = shape;
  t.data.assign(shape_size(shape), 0.0);
  return t;
}

Tensor Tensor::full(const std::vector<int>& shape, double v) {
  Tensor t = zeros(shape);
  for (auto& x : t.data) x = v;
  return t;
}

Tensor Tensor::scalar(double v) {
  Tensor t;
  t.data.assign(1, v);
  return t;
}

Tensor Tensor::row(std::vector<double> v) {
  Tensor t;
  t.shape = {static_cast<int>(v.size())};
  t.data = std::move(v);
  return t;
}

Tensor Tensor::matrix(int rows, int cols, std::vector<double> v) {
  return Tensor({rows, cols}, std::move(v));
}

bool Tensor::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

Tensor dense_fwd(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (w.rank() != 2) throw dim_error("dense: W must be rank 2, got " + shape_str(w.shape));
  const int m = w.dim(0);
  const int n = w.dim(1);
  if (b.rank() != 1 || b.dim(0) != m)
    throw dim_error("dense: bias shape " + shape_str(b.shape) + " does not match W rows " +
                    std::to_string(m));
  if (x.cols() != n || x.rank() > 2)
    throw dim_error("dense: input shape " + shape_str(x.shape) + " does not match W cols " +
                    std::to_string(n));
  const int batch = x.rows();
  Tensor y = Tensor::zeros(x.rank() <= 1 ? std::vector<int>{m} : std::vector<int>{batch, m});
  for (int r = 0; r < batch; ++r) {
    const double* xr = x.data.data() + static_cast<std::size_t>(r) * n;
    double* yr = y.data.data() + static_cast<std::size_t>(r) * m;
    for (int i = 0; i < m; ++i) {
      const double* wi = w.data.data() + static_cast<std::size_t>(i) * n;
      double acc = b.at(i);
      for (int j = 0; j < n; ++j) acc += wi[j] * xr[j];
      yr[i] = acc;
    }
  }
  return y;
}

Tensor relu_fwd(const Tensor& x) {
  Tensor y = x;
  for (auto& v : y.data) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor sigmoid_fwd(const Tensor& x) {
  Tensor y = x;
  for (auto& v : y.data) {
    // stable in both tails
    v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  }
  return y;
}

Tensor exp_fwd(const Tensor& x) {
  Tensor y = x;
  for (auto& v : y.data) v = std::exp(v);
  return y;
}

}  // namespace cibm
