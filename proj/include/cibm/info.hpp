#pragma once

#include <vector>

#include "cibm/graph.hpp"
#include "cibm/tensor.hpp"

namespace cibm {

// Per-row log N(c | mu, diag(sigma^2)):
//   sum_k [ -0.5 log(2 pi) - log sigma_k - (c_k - mu_k)^2 / (2 sigma_k^2) ]
std::vector<double> gaussian_logpdf_diag(const Tensor& c, const Tensor& mu, const Tensor& sigma);

// Monte-Carlo I(X;C) for diagonal-Gaussian conditionals. The batch supplies
// samples c_i with their conditional (mu_i, sigma_i); the marginal p(c) is
// the mixture over M independently drawn rows (mu'_j, sigma'_j):
//   mean_i [ log p(c_i|x_i) - logsumexp_j log p(c_i|x'_j) + log M ]
// Differentiable; gradients flow into every mu/sigma and into c.
NodePtr mi_xc(const NodePtr& c, const NodePtr& mu, const NodePtr& sigma,
              const NodePtr& mu_marginal, const NodePtr& sigma_marginal);

// Batch mean of sum_k log sigma_k (diagonal-Gaussian entropy up to the
// K/2 (1 + log 2 pi) constant, which is omitted by construction).
NodePtr entropy_c(const NodePtr& sigma);

// Tensor-level twins of the graph ops, for evaluation-time logging.
double mi_xc_value(const Tensor& c, const Tensor& mu, const Tensor& sigma,
                   const Tensor& mu_marginal, const Tensor& sigma_marginal);
double entropy_c_value(const Tensor& sigma);

// Kernel-bandwidth MI for information-plane snapshots: treats p(b|a_i) as
// N(b_i, h^2 I) and reuses the conditional-vs-mixture formula with the full
// sample set as the marginal. Logging only, never part of training gradients.
// bandwidth <= 0 selects mi_plane_bandwidth(b).
double mi_plane(const Tensor& a_samples, const Tensor& b_samples, double bandwidth = 0.0);

// Scaled median pairwise distance of the b samples (rows capped for cost).
double mi_plane_bandwidth(const Tensor& b_samples);

// Plug-in MI (nats) of the empirical joint contingency table.
double discrete_mi(const std::vector<int>& u, const std::vector<int>& v);

}  // namespace cibm
