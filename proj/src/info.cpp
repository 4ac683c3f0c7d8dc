#include "cibm/info.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include "cibm/errors.hpp"

namespace cibm {

namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727;  // 0.5 log(2 pi)

// Calibration factor on the median pairwise distance: chosen so that the
// kernel estimate recovers the closed-form MI of a correlated Gaussian pair
// (rho = 0.9) in the large-sample limit.
constexpr double kBandwidthScale = 0.7863;

void check_gauss_shapes(const Tensor& c, const Tensor& mu, const Tensor& sigma) {
  if (!c.same_shape(mu) || !c.same_shape(sigma))
    throw dim_error("gaussian_logpdf_diag: c " + shape_str(c.shape) + ", mu " +
                    shape_str(mu.shape) + ", sigma " + shape_str(sigma.shape) + " must match");
  for (double s : sigma.data)
    if (!(s > 0.0)) throw std::domain_error("gaussian_logpdf_diag: sigma must be > 0");
}

double logpdf_row(const double* c, const double* mu, const double* sigma, int k) {
  double acc = 0.0;
  for (int j = 0; j < k; ++j) {
    const double d = c[j] - mu[j];
    acc += -kHalfLog2Pi - std::log(sigma[j]) - d * d / (2.0 * sigma[j] * sigma[j]);
  }
  return acc;
}

struct MiForward {
  int b = 0, m = 0, k = 0;
  std::vector<double> cond_lp;   // [B] log p(c_i | x_i)
  std::vector<double> comp_lp;   // [B x M] log p(c_i | x'_j)
  std::vector<double> lse;       // [B] logsumexp_j comp_lp[i][j]
  double value = 0.0;
};

MiForward mi_forward(const Tensor& c, const Tensor& mu, const Tensor& sigma,
                     const Tensor& mu_m, const Tensor& sigma_m) {
  check_gauss_shapes(c, mu, sigma);
  if (!mu_m.same_shape(sigma_m))
    throw dim_error("mi_xc: marginal mu/sigma shapes differ");
  if (mu_m.cols() != c.cols())
    throw dim_error("mi_xc: marginal K " + std::to_string(mu_m.cols()) +
                    " does not match batch K " + std::to_string(c.cols()));
  for (double s : sigma_m.data)
    if (!(s > 0.0)) throw std::domain_error("mi_xc: marginal sigma must be > 0");

  MiForward f;
  f.b = c.rows();
  f.m = mu_m.rows();
  f.k = c.cols();
  if (f.m < 2) throw config_error("mi_xc: marginal batch needs at least 2 rows");

  f.cond_lp.resize(static_cast<std::size_t>(f.b));
  f.comp_lp.resize(static_cast<std::size_t>(f.b) * f.m);
  f.lse.resize(static_cast<std::size_t>(f.b));
  const double log_m = std::log(static_cast<double>(f.m));

  double acc = 0.0;
  for (int i = 0; i < f.b; ++i) {
    const double* ci = c.data.data() + static_cast<std::size_t>(i) * f.k;
    f.cond_lp[i] = logpdf_row(ci, mu.data.data() + static_cast<std::size_t>(i) * f.k,
                              sigma.data.data() + static_cast<std::size_t>(i) * f.k, f.k);
    double* row = f.comp_lp.data() + static_cast<std::size_t>(i) * f.m;
    double mx = -HUGE_VAL;
    for (int j = 0; j < f.m; ++j) {
      row[j] = logpdf_row(ci, mu_m.data.data() + static_cast<std::size_t>(j) * f.k,
                          sigma_m.data.data() + static_cast<std::size_t>(j) * f.k, f.k);
      mx = std::max(mx, row[j]);
    }
    double se = 0.0;
    for (int j = 0; j < f.m; ++j) se += std::exp(row[j] - mx);
    f.lse[i] = mx + std::log(se);
    acc += f.cond_lp[i] - f.lse[i] + log_m;
  }
  f.value = acc / static_cast<double>(f.b);
  return f;
}

}  // namespace

std::vector<double> gaussian_logpdf_diag(const Tensor& c, const Tensor& mu,
                                         const Tensor& sigma) {
  check_gauss_shapes(c, mu, sigma);
  const int b = c.rows();
  const int k = c.cols();
  std::vector<double> out(static_cast<std::size_t>(b));
  for (int i = 0; i < b; ++i)
    out[i] = logpdf_row(c.data.data() + static_cast<std::size_t>(i) * k,
                        mu.data.data() + static_cast<std::size_t>(i) * k,
                        sigma.data.data() + static_cast<std::size_t>(i) * k, k);
  return out;
}

double mi_xc_value(const Tensor& c, const Tensor& mu, const Tensor& sigma,
                   const Tensor& mu_m, const Tensor& sigma_m) {
  return mi_forward(c, mu, sigma, mu_m, sigma_m).value;
}

NodePtr mi_xc(const NodePtr& c, const NodePtr& mu, const NodePtr& sigma,
              const NodePtr& mu_marginal, const NodePtr& sigma_marginal) {
  MiForward f = mi_forward(c->value, mu->value, sigma->value, mu_marginal->value,
                           sigma_marginal->value);

  auto n = std::make_shared<Node>();
  n->value = Tensor::scalar(f.value);
  n->parents = {c, mu, sigma, mu_marginal, sigma_marginal};
  n->backprop = [f = std::move(f)](Node& self) {
    Node& c = *self.parents[0];
    Node& mu = *self.parents[1];
    Node& sigma = *self.parents[2];
    Node& mu_m = *self.parents[3];
    Node& sigma_m = *self.parents[4];
    const double g = self.grad.data[0] / static_cast<double>(f.b);

    for (int i = 0; i < f.b; ++i) {
      const std::size_t off = static_cast<std::size_t>(i) * f.k;
      const double* ci = c.value.data.data() + off;

      // conditional term: d lp / d mu = (c-mu)/s^2, d lp / d sigma = d^2/s^3 - 1/s,
      // d lp / d c = -(c-mu)/s^2
      for (int j = 0; j < f.k; ++j) {
        const double s = sigma.value.data[off + j];
        const double d = ci[j] - mu.value.data[off + j];
        const double inv2 = 1.0 / (s * s);
        mu.grad.data[off + j] += g * d * inv2;
        sigma.grad.data[off + j] += g * (d * d * inv2 / s - 1.0 / s);
        c.grad.data[off + j] += g * (-d * inv2);
      }

      // mixture term: softmax-weighted component gradients, subtracted
      const double* row = f.comp_lp.data() + static_cast<std::size_t>(i) * f.m;
      for (int j = 0; j < f.m; ++j) {
        const double w = std::exp(row[j] - f.lse[i]);
        if (w == 0.0) continue;
        const std::size_t moff = static_cast<std::size_t>(j) * f.k;
        for (int t = 0; t < f.k; ++t) {
          const double s = sigma_m.value.data[moff + t];
          const double d = ci[t] - mu_m.value.data[moff + t];
          const double inv2 = 1.0 / (s * s);
          mu_m.grad.data[moff + t] -= g * w * d * inv2;
          sigma_m.grad.data[moff + t] -= g * w * (d * d * inv2 / s - 1.0 / s);
          c.grad.data[off + t] -= g * w * (-d * inv2);
        }
      }
    }
  };
  return n;
}

double entropy_c_value(const Tensor& sigma) {
  for (double s : sigma.data)
    if (!(s > 0.0)) throw std::domain_error("entropy_c: sigma must be > 0");
  const int b = sigma.rows();
  double acc = 0.0;
  for (double s : sigma.data) acc += std::log(s);
  return acc / static_cast<double>(b);
}

NodePtr entropy_c(const NodePtr& sigma) {
  const double value = entropy_c_value(sigma->value);
  auto n = std::make_shared<Node>();
  n->value = Tensor::scalar(value);
  n->parents = {sigma};
  n->backprop = [](Node& self) {
    Node& sigma = *self.parents[0];
    const double g = self.grad.data[0] / static_cast<double>(sigma.value.rows());
    for (std::size_t i = 0; i < sigma.value.size(); ++i)
      sigma.grad.data[i] += g / sigma.value.data[i];
  };
  return n;
}

double mi_plane_bandwidth(const Tensor& b_samples) {
  const int n = b_samples.rows();
  const int d = b_samples.cols();
  if (n < 2) return 0.0;
  // strided row subsample to bound the O(n^2) distance set
  const int cap = 2048;
  const int stride = (n + cap - 1) / cap;
  std::vector<int> rows;
  for (int i = 0; i < n; i += stride) rows.push_back(i);
  const int m = static_cast<int>(rows.size());

  std::vector<double> dist;
  dist.reserve(static_cast<std::size_t>(m) * (m - 1) / 2);
  for (int i = 0; i < m; ++i) {
    const double* bi = b_samples.data.data() + static_cast<std::size_t>(rows[i]) * d;
    for (int j = i + 1; j < m; ++j) {
      const double* bj = b_samples.data.data() + static_cast<std::size_t>(rows[j]) * d;
      double sq = 0.0;
      for (int t = 0; t < d; ++t) {
        const double diff = bi[t] - bj[t];
        sq += diff * diff;
      }
      dist.push_back(std::sqrt(sq));
    }
  }
  if (dist.empty()) return 0.0;
  const std::size_t mid = dist.size() / 2;
  std::nth_element(dist.begin(), dist.begin() + mid, dist.end());
  return kBandwidthScale * dist[mid];
}

double mi_plane(const Tensor& a_samples, const Tensor& b_samples, double bandwidth) {
  const int n = b_samples.rows();
  const int d = b_samples.cols();
  if (a_samples.rows() != n)
    throw dim_error("mi_plane: a and b row counts differ");
  if (n < 16) throw validation_error("mi_plane: needs at least 16 samples");
  const double h = bandwidth > 0.0 ? bandwidth : mi_plane_bandwidth(b_samples);
  if (h <= 0.0) return 0.0;  // degenerate b (all rows identical)

  // I = log N - mean_i logsumexp_j ( -|b_i - b_j|^2 / (2 h^2) );
  // the Gaussian normalization constants cancel between the conditional
  // and the mixture components.
  const double inv2h2 = 1.0 / (2.0 * h * h);
  double acc = 0.0;
  std::vector<double> expo(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double* bi = b_samples.data.data() + static_cast<std::size_t>(i) * d;
    double mx = -HUGE_VAL;
    for (int j = 0; j < n; ++j) {
      const double* bj = b_samples.data.data() + static_cast<std::size_t>(j) * d;
      double sq = 0.0;
      for (int t = 0; t < d; ++t) {
        const double diff = bi[t] - bj[t];
        sq += diff * diff;
      }
      expo[j] = -sq * inv2h2;
      mx = std::max(mx, expo[j]);
    }
    double se = 0.0;
    for (int j = 0; j < n; ++j) se += std::exp(expo[j] - mx);
    acc += mx + std::log(se);
  }
  return std::log(static_cast<double>(n)) - acc / static_cast<double>(n);
}

double discrete_mi(const std::vector<int>& u, const std::vector<int>& v) {
  if (u.size() != v.size()) throw dim_error("discrete_mi: length mismatch");
  if (u.empty()) throw validation_error("discrete_mi: empty input");
  const double n = static_cast<double>(u.size());

  std::map<int, int> ui, vi;
  for (int x : u) ui.emplace(x, 0);
  for (int x : v) vi.emplace(x, 0);
  int next = 0;
  for (auto& kv : ui) kv.second = next++;
  next = 0;
  for (auto& kv : vi) kv.second = next++;
  const int nu = static_cast<int>(ui.size());
  const int nv = static_cast<int>(vi.size());

  std::vector<double> joint(static_cast<std::size_t>(nu) * nv, 0.0);
  std::vector<double> pu(static_cast<std::size_t>(nu), 0.0);
  std::vector<double> pv(static_cast<std::size_t>(nv), 0.0);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const int a = ui[u[i]];
    const int b = vi[v[i]];
    joint[static_cast<std::size_t>(a) * nv + b] += 1.0;
    pu[a] += 1.0;
    pv[b] += 1.0;
  }

  double mi = 0.0;
  for (int a = 0; a < nu; ++a)
    for (int b = 0; b < nv; ++b) {
      const double nij = joint[static_cast<std::size_t>(a) * nv + b];
      if (nij == 0.0) continue;
      mi += (nij / n) * std::log(nij * n / (pu[a] * pv[b]));
    }
  return std::max(mi, 0.0);
}

}  // namespace cibm
