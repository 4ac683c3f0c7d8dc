#include <doctest.h>

#include <cmath>

#include "cibm/errors.hpp"
#include "cibm/gradcheck.hpp"
#include "cibm/info.hpp"
#include "test_util.hpp"

using namespace cibm;
using testutil::random_tensor;

namespace {

double phi(double c, double mean) {
  return std::exp(-0.5 * (c - mean) * (c - mean)) / std::sqrt(2.0 * M_PI);
}

// quadrature oracle for I(X;C) with X ~ Bernoulli(0.5) and C|X ~ N(+-a, 1):
// I = H(C) - H(C|X), H(C|X) = 0.5 ln(2 pi e), H(C) by trapezoid integration
double mixture_mi_oracle(double a) {
  const double lo = -a - 12.0, hi = a + 12.0;
  const int steps = 400000;
  const double dx = (hi - lo) / steps;
  double h_c = 0.0;
  for (int i = 0; i <= steps; ++i) {
    const double c = lo + i * dx;
    const double p = 0.5 * phi(c, -a) + 0.5 * phi(c, a);
    if (p <= 0.0) continue;
    const double w = (i == 0 || i == steps) ? 0.5 : 1.0;
    h_c += w * (-p * std::log(p)) * dx;
  }
  const double h_cond = 0.5 * std::log(2.0 * M_PI * M_E);
  return h_c - h_cond;
}

}  // namespace

TEST_CASE("gaussian_logpdf_diag closed-form values") {
  const auto lp = gaussian_logpdf_diag(Tensor::matrix(1, 1, {0.3}), Tensor::matrix(1, 1, {0.3}),
                                       Tensor::matrix(1, 1, {1.0}));
  CHECK(lp[0] == doctest::Approx(-0.918938533204673).epsilon(1e-12));

  // scaling sigma by s shifts the logpdf at the mean by -K log s
  const int k = 3;
  const Tensor c = Tensor::matrix(1, k, {1, 2, 3});
  const auto base = gaussian_logpdf_diag(c, c, Tensor::full({1, k}, 1.0));
  const auto scaled = gaussian_logpdf_diag(c, c, Tensor::full({1, k}, 2.5));
  CHECK(scaled[0] - base[0] == doctest::Approx(-k * std::log(2.5)).epsilon(1e-12));

  CHECK_THROWS_AS(gaussian_logpdf_diag(c, c, Tensor::full({1, k}, -1.0)), std::domain_error);
}

TEST_CASE("gaussian density integrates to one in 1-D") {
  const double mu = 0.7, sigma = 1.3;
  const double lo = mu - 12.0 * sigma, hi = mu + 12.0 * sigma;
  const int steps = 200000;
  const double dx = (hi - lo) / steps;
  double integral = 0.0;
  for (int i = 0; i <= steps; ++i) {
    const double c = lo + i * dx;
    const auto lp = gaussian_logpdf_diag(Tensor::matrix(1, 1, {c}), Tensor::matrix(1, 1, {mu}),
                                         Tensor::matrix(1, 1, {sigma}));
    integral += ((i == 0 || i == steps) ? 0.5 : 1.0) * std::exp(lp[0]) * dx;
  }
  CHECK(integral == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("mi_xc is exactly zero for identical conditionals") {
  RngStream rng(21, "mi-zero");
  const int b = 64, m = 64, k = 2;
  Tensor mu = Tensor::zeros({b, k});
  Tensor sigma = Tensor::full({b, k}, 1.0);
  Tensor c = Tensor::zeros({b, k});
  for (auto& v : c.data) v = rng.normal();
  Tensor mu_m = Tensor::zeros({m, k});
  Tensor sigma_m = Tensor::full({m, k}, 1.0);
  const double est = mi_xc_value(c, mu, sigma, mu_m, sigma_m);
  CHECK(std::abs(est) < 1e-12);
}

TEST_CASE("mi_xc tracks the quadrature oracle for binary-X mixtures") {
  for (double a : {5.0, 0.5}) {
    const double oracle = mixture_mi_oracle(a);
    if (a == 5.0) CHECK(oracle == doctest::Approx(std::log(2.0)).epsilon(1e-4));

    RngStream rng(22, "mi-mix", static_cast<uint64_t>(a * 10));
    const int b = 2048, m = 64;
    Tensor mu = Tensor::zeros({b, 1});
    Tensor sigma = Tensor::full({b, 1}, 1.0);
    Tensor c = Tensor::zeros({b, 1});
    for (int i = 0; i < b; ++i) {
      mu.data[static_cast<std::size_t>(i)] = rng.bernoulli(0.5) ? a : -a;
      c.data[static_cast<std::size_t>(i)] = mu.data[static_cast<std::size_t>(i)] + rng.normal();
    }
    Tensor mu_m = Tensor::zeros({m, 1});
    Tensor sigma_m = Tensor::full({m, 1}, 1.0);
    for (int j = 0; j < m; ++j) mu_m.data[static_cast<std::size_t>(j)] = rng.bernoulli(0.5) ? a : -a;

    const double est = mi_xc_value(c, mu, sigma, mu_m, sigma_m);
    CHECK(std::abs(est - oracle) < 0.05);
  }
}

TEST_CASE("mi_xc is invariant to marginal permutations") {
  RngStream rng(23, "mi-perm");
  const int b = 16, m = 8, k = 2;
  const Tensor mu = random_tensor({b, k}, rng);
  Tensor sigma = random_tensor({b, k}, rng, 0.2);
  for (auto& v : sigma.data) v = std::exp(v);
  Tensor c = mu;
  for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] += sigma.data[i] * rng.normal();
  Tensor mu_m = random_tensor({m, k}, rng);
  Tensor sigma_m = random_tensor({m, k}, rng, 0.2);
  for (auto& v : sigma_m.data) v = std::exp(v);

  const double base = mi_xc_value(c, mu, sigma, mu_m, sigma_m);
  Tensor mu_p = mu_m, sigma_p = sigma_m;  // reverse the marginal rows
  for (int j = 0; j < m; ++j)
    for (int t = 0; t < k; ++t) {
      mu_p.at(j, t) = mu_m.at(m - 1 - j, t);
      sigma_p.at(j, t) = sigma_m.at(m - 1 - j, t);
    }
  const double perm = mi_xc_value(c, mu, sigma, mu_p, sigma_p);
  CHECK(base == doctest::Approx(perm).epsilon(1e-12));
}

TEST_CASE("mi_xc rejects degenerate marginals") {
  const Tensor one = Tensor::full({1, 1}, 1.0);
  CHECK_THROWS_AS(mi_xc_value(one, one, one, one, one), config_error);
}

TEST_CASE("mi_xc gradient matches finite differences") {
  RngStream rng(24, "mi-fd");
  const int b = 4, m = 3, k = 2;
  const Tensor c = random_tensor({b, k}, rng);
  const Tensor mu = random_tensor({b, k}, rng);
  Tensor sigma = Tensor::full({b, k}, 0.0);
  for (auto& v : sigma.data) v = 0.6 + 0.8 * rng.uniform();
  const Tensor mu_m = random_tensor({m, k}, rng);
  Tensor sigma_m = Tensor::full({m, k}, 0.0);
  for (auto& v : sigma_m.data) v = 0.6 + 0.8 * rng.uniform();

  const double err = grad_check(
      [](const std::vector<NodePtr>& p) { return mi_xc(p[0], p[1], p[2], p[3], p[4]); },
      {c, mu, sigma, mu_m, sigma_m});
  CHECK(err < 1e-4);
}

TEST_CASE("entropy_c closed forms") {
  CHECK(entropy_c_value(Tensor::full({4, 3}, 1.0)) == 0.0);
  CHECK(entropy_c_value(Tensor::full({5, 2}, M_E)) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_THROWS_AS(entropy_c_value(Tensor::full({1, 1}, 0.0)), std::domain_error);

  // gradient w.r.t. log-sigma parameters is exactly 1/B per coordinate
  const int b = 4, k = 3;
  RngStream rng(25, "ent");
  const Tensor log_sigma = random_tensor({b, k}, rng, 0.3);
  auto ls = leaf(log_sigma);
  backward(entropy_c(expv(ls)));
  for (std::size_t i = 0; i < ls->grad.size(); ++i)
    CHECK(ls->grad.data[i] == doctest::Approx(1.0 / b).epsilon(1e-12));
}

TEST_CASE("entropy_c gradient matches finite differences") {
  RngStream rng(26, "ent-fd");
  Tensor sigma = Tensor::zeros({3, 4});
  for (auto& v : sigma.data) v = 0.5 + rng.uniform();
  const double err =
      grad_check([](const std::vector<NodePtr>& p) { return entropy_c(p[0]); }, {sigma});
  CHECK(err < 1e-4);
}

TEST_CASE("mi_plane degenerate and limit behavior") {
  RngStream rng(27, "plane");
  const int n = 256;
  Tensor a = random_tensor({n, 1}, rng);
  CHECK(mi_plane(a, Tensor::full({n, 1}, 2.0)) == 0.0);

  const double coarse = mi_plane(a, a, 0.1);
  const double fine = mi_plane(a, a, 0.01);
  CHECK(coarse > 1.0);
  CHECK(fine > coarse);
}

TEST_CASE("mi_plane matches the closed-form correlated-Gaussian MI") {
  const double rho = 0.9;
  const double closed = -0.5 * std::log(1.0 - rho * rho);
  RngStream rng(28, "plane-gauss");
  const int n = 4096;
  Tensor a = Tensor::zeros({n, 1});
  Tensor b = Tensor::zeros({n, 1});
  for (int i = 0; i < n; ++i) {
    const double u = rng.normal();
    a.data[static_cast<std::size_t>(i)] = u;
    b.data[static_cast<std::size_t>(i)] = rho * u + std::sqrt(1.0 - rho * rho) * rng.normal();
  }
  const double est = mi_plane(a, b);
  CHECK(std::abs(est - closed) < 0.1);
}

TEST_CASE("discrete_mi plug-in values") {
  RngStream rng(29, "dmi");
  const int n = 100000;
  std::vector<int> u(n), v(n);
  for (int i = 0; i < n; ++i) {
    u[static_cast<std::size_t>(i)] = rng.bernoulli(0.5) ? 1 : 0;
    v[static_cast<std::size_t>(i)] = rng.bernoulli(0.5) ? 1 : 0;
  }
  CHECK(discrete_mi(u, v) <= 0.01);
  CHECK(discrete_mi(u, u) == doctest::Approx(std::log(2.0)).epsilon(1e-3));

  // joint table [[0.4, 0.1], [0.1, 0.4]] -> 0.192745 nats
  std::vector<int> a, b2;
  for (int i = 0; i < 4; ++i) { a.push_back(0); b2.push_back(0); }
  a.push_back(0); b2.push_back(1);
  a.push_back(1); b2.push_back(0);
  for (int i = 0; i < 4; ++i) { a.push_back(1); b2.push_back(1); }
  CHECK(discrete_mi(a, b2) == doctest::Approx(0.192745).epsilon(1e-5));

  CHECK(discrete_mi(a, b2) >= 0.0);
}
