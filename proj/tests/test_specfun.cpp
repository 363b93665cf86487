#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "kdyn/errors.hpp"
#include "kdyn/specfun.hpp"
#include "test_util.hpp"

using namespace kdyn;
using kdyn::testing::sphere_even_moment;
using kdyn::testing::sphere_marginal_mean;

TEST_CASE("harmonic dimensions match closed forms") {
  CHECK(dim_spherical_harmonics(400, 0) == 1);
  CHECK(dim_spherical_harmonics(400, 1) == 400);
  CHECK(dim_spherical_harmonics(400, 2) == 80199);
  for (int k = 0; k < 20; ++k) CHECK(dim_spherical_harmonics(3, k) == static_cast<std::uint64_t>(2 * k + 1));
  // B(d,3) = d(d-1)(d+4)/6 for the cubic harmonics.
  for (int d : {5, 17, 100}) {
    CHECK(dim_spherical_harmonics(d, 3) == static_cast<std::uint64_t>(d) * (d - 1) * (d + 4) / 6);
  }
  CHECK_THROWS_AS(dim_spherical_harmonics(400, 30), OverflowError);
  CHECK(dim_spherical_harmonics_real(400, 30) > 1e40);
  for (int k = 0; k < 8; ++k) {
    const double exact = static_cast<double>(dim_spherical_harmonics(50, k));
    CHECK(dim_spherical_harmonics_real(50, k) == doctest::Approx(exact).epsilon(1e-13));
  }
}

TEST_CASE("Gegenbauer polynomials: low degrees and normalization") {
  const GegenbauerBasis b(10, 12);
  CHECK(b.eval(0, 3.7) == 1.0);
  CHECK(b.eval(1, 5.0) == doctest::Approx(0.5));
  for (double t : {-10.0, -3.1, 0.0, 2.5, 9.9}) {
    CHECK(b.eval(2, t) == doctest::Approx((t * t - 10.0) / 90.0).epsilon(1e-14));
  }
  for (int k = 0; k <= 12; ++k) CHECK(b.eval(k, 10.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(b.eval(13, 0.0), InputError);
  CHECK_THROWS_AS(b.eval(2, 10.5), InputError);
  std::vector<double> all;
  b.eval_all(3.3, all);
  REQUIRE(all.size() == 13);
  for (int k = 0; k <= 12; ++k) CHECK(all[k] == doctest::Approx(b.eval(k, 3.3)));
}

TEST_CASE("Gegenbauer polynomials are orthonormal against an independent trapezoid oracle") {
  for (int d : {10, 50}) {
    const GegenbauerBasis b(d, 10);
    const double r = std::sqrt(static_cast<double>(d));
    for (int j = 0; j <= 10; ++j) {
      for (int k = j; k <= 10; ++k) {
        const double ip = sphere_marginal_mean(d, [&](double x) { return b.eval(j, r * x) * b.eval(k, r * x); });
        const double scaled = ip * dim_spherical_harmonics_real(d, k);
        CHECK(std::abs(scaled - (j == k ? 1.0 : 0.0)) <= 1e-10);
      }
    }
  }
}

TEST_CASE("marginal quadrature integrates sphere moments exactly") {
  for (int d : {3, 10, 400}) {
    const auto q = marginal_quadrature(d, 40);
    double wsum = 0.0;
    for (double w : q.weights) wsum += w;
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-14));
    for (int m = 1; m <= 6; ++m) {
      const double v = q.integrate([&](double x) { return std::pow(x, 2 * m); });
      CHECK(v == doctest::Approx(sphere_even_moment(d, m)).epsilon(1e-11));
      CHECK(q.integrate([&](double x) { return std::pow(x, 2 * m - 1); }) == doctest::Approx(0.0).scale(1.0));
    }
  }
}

TEST_CASE("kink-aware quadrature integrates |x| to near machine precision") {
  const std::vector<double> kinks{0.0};
  for (int d : {5, 50, 2000}) {
    const auto q = marginal_quadrature_piecewise(d, kinks);
    // E|x_1| = sqrt(d) Gamma(d/2) / (sqrt(pi) Gamma((d+1)/2)).
    const double oracle = std::sqrt(d / std::numbers::pi) * std::exp(std::lgamma(d / 2.0) - std::lgamma((d + 1) / 2.0));
    CHECK(q.integrate([](double x) { return std::abs(x); }) == doctest::Approx(oracle).epsilon(1e-10));
    CHECK(q.integrate([](double x) { return x * x; }) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("ReLU Gegenbauer coefficients: closed-form low degrees and parity") {
  const Activation relu = activations::relu();
  for (int d : {10, 100, 400}) {
    const GegenbauerBasis b(d, 30);
    const auto c = gegenbauer_coefficients(b, relu.fn, marginal_quadrature_for(d, relu));
    // c_1 = E[relu(x) x] / sqrt(d) = 1/(2 sqrt d).
    CHECK(c[1] == doctest::Approx(0.5 / std::sqrt(static_cast<double>(d))).epsilon(1e-12));
    // Only the linear part of relu = (x + |x|)/2 is odd.
    for (int k = 3; k <= 29; k += 2) CHECK(std::abs(c[k]) < 1e-13);
    // Parseval: sum_k c_k^2 B_k approaches E[relu^2] = 1/2 from below.
    double s = 0.0;
    for (int k = 0; k <= 30; ++k) s += c[k] * c[k] * dim_spherical_harmonics_real(d, k);
    CHECK(s <= 0.5 + 1e-12);
    CHECK(s > 0.49);
  }
}

TEST_CASE("coefficient extraction rejects non-finite activations") {
  const GegenbauerBasis b(10, 5);
  const auto q = marginal_quadrature(10, 50);
  CHECK_THROWS_AS(gegenbauer_coefficients(b, [](double x) { return 1.0 / (x - x); }, q), NumericalError);
}

TEST_CASE("Hermite rule: orthogonality and ReLU coefficients") {
  const auto gh = gauss_hermite(60);
  for (int j = 0; j <= 8; ++j) {
    for (int k = 0; k <= 8; ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
        s += gh.weights[i] * hermite_he(j, gh.nodes[i]) * hermite_he(k, gh.nodes[i]);
      }
      const double scale = std::sqrt(std::tgamma(j + 1.0) * std::tgamma(k + 1.0));
      CHECK(std::abs(s - (j == k ? std::tgamma(k + 1.0) : 0.0)) <= 1e-9 * scale);
    }
  }
  const auto mu = hermite_coefficients(activations::relu(), 6).mu;
  const double inv = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  CHECK(mu[0] == doctest::Approx(inv).epsilon(1e-10));
  CHECK(mu[1] == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(mu[2] == doctest::Approx(inv).epsilon(1e-10));
  CHECK(std::abs(mu[3]) < 1e-10);
  // mu_4 = E[He_4(G) relu(G)] = -inv.
  CHECK(mu[4] == doctest::Approx(-inv).epsilon(1e-9));
}

TEST_CASE("Hermite coefficients of polynomial activations are exact") {
  const auto mu = hermite_coefficients(parse_activation("2*he3+0.5*he1"), 5).mu;
  CHECK(mu[3] == doctest::Approx(12.0));
  CHECK(mu[1] == doctest::Approx(0.5));
  CHECK(std::abs(mu[0]) < 1e-12);
  CHECK(std::abs(mu[2]) < 1e-12);
}

TEST_CASE("scaled Gegenbauer coefficients approach Hermite coefficients as d grows") {
  const Activation relu = activations::relu();
  const std::vector<int> dims{100, 400, 2000};
  const auto mu = hermite_coefficients(relu, 3).mu;
  for (int k = 0; k <= 2; ++k) {
    const auto v = check_mu_xi_limit(relu, k, dims);
    REQUIRE(v.size() == dims.size());
    const double e0 = std::abs(v[0] - mu[k]);
    const double e2 = std::abs(v[2] - mu[k]);
    CHECK(e2 <= e0 + 1e-12);
    CHECK(e2 <= 0.05 * std::abs(mu[k]));
  }
}

TEST_CASE("property: Parseval identity is exact for random polynomial activations") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  std::uniform_int_distribution<int> dim(4, 300);
  for (int trial = 0; trial < 25; ++trial) {
    const int d = dim(rng);
    Activation a = activations::scaled(activations::hermite(0), coef(rng));
    for (int k = 1; k <= 4; ++k) a = activations::sum(a, activations::scaled(activations::hermite(k), coef(rng)));
    const GegenbauerBasis b(d, 8);
    const auto q = marginal_quadrature(d, 30);
    const auto c = gegenbauer_coefficients(b, a.fn, q);
    double s = 0.0;
    for (int k = 0; k <= 8; ++k) s += c[k] * c[k] * dim_spherical_harmonics_real(d, k);
    const double norm2 = q.integrate([&](double x) { return a(x) * a(x); });
    CHECK(s == doctest::Approx(norm2).epsilon(1e-10));
    for (int k = 5; k <= 8; ++k) CHECK(std::abs(c[k]) < 1e-12);
  }
}
