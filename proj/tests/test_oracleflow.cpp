#include <doctest.h>

#include <cmath>

#include "kdyn/errors.hpp"
#include "kdyn/kernels.hpp"
#include "kdyn/oracleflow.hpp"
#include "kdyn/spheredata.hpp"
#include "test_util.hpp"

using namespace kdyn;

namespace {

struct Quadratic400 {
  KernelSpectrum spec = build_dot_kernel(activations::relu(), 400, 30);
  std::vector<double> norms = degree_norms(parse_target("quadratic", 400));
};

}  // namespace

TEST_CASE("oracle risk limits") {
  const Quadratic400 c;
  double f2 = 0.0;
  for (double v : c.norms) f2 += v;
  CHECK(oracle_risk(c.spec, c.norms, 0.3, 0.0) == doctest::Approx(f2 + 0.3));
  CHECK(oracle_risk(c.spec, c.norms, 0.3, 1e12) == doctest::Approx(0.3).epsilon(1e-12));
  // Degree 3 is invisible to ReLU; its energy stays forever.
  const auto cubic = degree_norms(parse_target("cubic", 400));
  CHECK(oracle_risk(c.spec, cubic, 0.0, 1e12) == doctest::Approx(cubic[3]).epsilon(1e-9));
  CHECK_THROWS_AS(oracle_risk(c.spec, c.norms, 0.0, -1.0), InputError);
}

TEST_CASE("oracle staircase at d = 400") {
  const Quadratic400 c;
  const double d = 400;
  const double r15 = oracle_risk(c.spec, c.norms, 0.0, std::pow(d, 1.5));
  const double r05 = oracle_risk(c.spec, c.norms, 0.0, std::pow(d, 0.5));
  CHECK(std::abs(r15 - c.norms[2]) <= 0.1 * c.norms[2]);
  CHECK(std::abs((r05 - r15) - 0.5) <= 0.05);
  CHECK(oracle_l2_distance(c.spec, c.norms, 1, std::pow(d, 1.5)) <= 0.15 * target_norm2(parse_target("quadratic", 400)));
}

TEST_CASE("oracle risk derivative at zero") {
  const Quadratic400 c;
  double slope = 0.0;
  for (std::size_t k = 0; k < c.norms.size(); ++k) slope += 2.0 * c.spec.xi[k] * c.norms[k];
  const double h = 1e-6;
  const double fd = (oracle_risk(c.spec, c.norms, 0.0, 0.0) - oracle_risk(c.spec, c.norms, 0.0, h)) / h;
  CHECK(fd == doctest::Approx(slope).epsilon(1e-6));
}

TEST_CASE("oracle distance to the low-degree projection") {
  const Quadratic400 c;
  CHECK(oracle_l2_distance(c.spec, c.norms, 0, 0.0) == doctest::Approx(c.norms[0]));
  CHECK(oracle_l2_distance(c.spec, c.norms, 5, 0.0) == doctest::Approx(c.norms[0] + c.norms[1] + c.norms[2]));
  const std::vector<double> only0{0.7};
  CHECK(oracle_l2_distance(c.spec, only0, 0, 0.0) == doctest::Approx(0.7));
  // Learning everything: distance to P_{<=0} f is the energy above degree 0.
  CHECK(oracle_l2_distance(c.spec, c.norms, 0, 1e12) == doctest::Approx(c.norms[1] + c.norms[2]).epsilon(1e-9));
  CHECK_THROWS_AS(oracle_l2_distance(c.spec, c.norms, -1, 1.0), InputError);
}

TEST_CASE("oracle curves are monotone and validate the grid") {
  const Quadratic400 c;
  std::vector<double> grid;
  for (int i = 0; i < 200; ++i) grid.push_back(std::pow(10.0, -1.0 + 0.04 * i));
  const auto oc = oracle_curve(c.spec, c.norms, 0.1, grid, 1);
  REQUIRE(oc.risk.size() == grid.size());
  REQUIRE(oc.l2_to_projection.has_value());
  for (std::size_t i = 1; i < grid.size(); ++i) CHECK(oc.risk[i] <= oc.risk[i - 1] + 1e-12);
  const std::vector<double> one{5.0};
  CHECK(oracle_curve(c.spec, c.norms, 0.0, one).risk.front() == oracle_risk(c.spec, c.norms, 0.0, 5.0));
  const std::vector<double> bad{1.0, 1.0};
  CHECK_THROWS_AS(oracle_curve(c.spec, c.norms, 0.0, bad), InputError);

  const std::vector<double> constant{0.49};
  const auto cc = oracle_curve(c.spec, constant, 0.2, grid);
  CHECK(cc.risk.front() <= 0.69);
  CHECK(cc.risk.back() == doctest::Approx(0.2).epsilon(1e-6));
}

TEST_CASE("cyclic and dot kernels act identically on invariant targets") {
  // E_x'[H_inv(x, x') f(x')] = E_x'[H(x, x') f(x')] for invariant f.
  const int d = 5;
  const auto spec = build_dot_kernel(activations::relu(), d, 30);
  const auto ck = make_cyclic(spec);
  const auto f = cyclic_cubic(d);
  const Eigen::MatrixXd x = sample_sphere(3, d, std::uint64_t{1});
  const Eigen::MatrixXd Xp = sample_sphere(200000, d, std::uint64_t{2});
  const Eigen::VectorXd fp = eval_target(f, Xp);
  const Eigen::MatrixXd Hd = kernel_cross(spec, x, Xp);
  const Eigen::MatrixXd Hc = cyclic_kernel_cross(ck, x, Xp);
  for (int i = 0; i < 3; ++i) {
    const Eigen::VectorXd diff = (Hc.row(i).transpose() - Hd.row(i).transpose()).cwiseProduct(fp);
    const auto est = kdyn::testing::mean_se(diff);
    CHECK(std::abs(est.mean) <= 3.0 * est.se);
  }
  // Hence the oracle curve of the cyclic kernel uses the same eigenvalues.
  const auto norms = invariant_degree_norms(f);
  CHECK(norms == degree_norms(f));
}
