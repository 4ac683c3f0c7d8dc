#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace cibm {

// Dense row-major array of doubles. Rank 0 (empty shape) is a scalar.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::vector<int> s, std::vector<double> d);

  static Tensor zeros(const std::vector<int>& shape);
  static Tensor full(const std::vector<int>& shape, double v);
  static Tensor scalar(double v);
  static Tensor row(std::vector<double> v);  // shape {n}
  static Tensor matrix(int rows, int cols, std::vector<double> v);

  std::size_t size() const { return data.size(); }
  int rank() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  bool is_scalar() const { return data.size() == 1 && shape.size() <= 1; }
  bool all_finite() const;

  double& at(int i) { return data[static_cast<std::size_t>(i)]; }
  double at(int i) const { return data[static_cast<std::size_t>(i)]; }
  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * dim(1) + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * dim(1) + c]; }

  // rows()/cols() treat rank-1 as a single row
  int rows() const { return rank() <= 1 ? 1 : dim(0); }
  int cols() const { return rank() == 0 ? 1 : dim(rank() - 1); }
};

std::size_t shape_size(const std::vector<int>& shape);
std::string shape_str(const std::vector<int>& shape);

// y = x W^T + b with x [B x n] (or [n]), W [m x n], b [m]; throws dim_error.
Tensor dense_fwd(const Tensor& x, const Tensor& w, const Tensor& b);
Tensor relu_fwd(const Tensor& x);
Tensor sigmoid_fwd(const Tensor& x);
Tensor exp_fwd(const Tensor& x);

}  // namespace cibm
