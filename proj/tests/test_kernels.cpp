#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "kdyn/errors.hpp"
#include "kdyn/kernels.hpp"
#include "kdyn/spheredata.hpp"
#include "test_util.hpp"

using namespace kdyn;
using kdyn::testing::relu_arccos;

TEST_CASE("ReLU kernel series matches the arc-cosine closed form") {
  for (int d : {50, 100, 400}) {
    const auto spec = build_dot_kernel(activations::relu(), d, 30);
    CHECK(spec.diagonal_exact == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(spec.xi[1] == doctest::Approx(0.25 / d).epsilon(1e-12));
    for (double s = -0.3; s <= 0.3001; s += 0.05) {
      CHECK(kernel_value(spec, s) == doctest::Approx(relu_arccos(s)).epsilon(1e-6));
    }
    CHECK(spec.truncation_gap() >= 0.0);
  }
}

TEST_CASE("kernel values are insensitive to the truncation degree on the bulk") {
  const auto k20 = build_dot_kernel(activations::relu(), 400, 20);
  const auto k40 = build_dot_kernel(activations::relu(), 400, 40);
  for (double s = -0.2; s <= 0.2001; s += 0.02) {
    CHECK(std::abs(kernel_value(k20, s) - kernel_value(k40, s)) < 1e-8);
  }
}

TEST_CASE("linear activation gives the linear kernel") {
  const int d = 12;
  const auto spec = build_dot_kernel(activations::identity(), d, 10);
  CHECK(spec.xi[1] == doctest::Approx(1.0 / d));
  for (int k = 2; k <= 10; ++k) CHECK(std::abs(spec.xi[k]) < 1e-28);
  const Eigen::MatrixXd X = sample_sphere(30, d, std::uint64_t{3});
  const Eigen::MatrixXd H = kernel_matrix(spec, X);
  const Eigen::MatrixXd lin = X * X.transpose() / d;
  CHECK((H - lin).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("kernel matrices are symmetric PSD with exact diagonal") {
  const auto spec = build_dot_kernel(parse_activation("relu+0.1*he3"), 20, 30);
  const Eigen::MatrixXd X = sample_sphere(120, 20, std::uint64_t{11});
  const Eigen::MatrixXd H = kernel_matrix(spec, X);
  CHECK((H - H.transpose()).cwiseAbs().maxCoeff() == 0.0);
  for (int i = 0; i < H.rows(); ++i) CHECK(H(i, i) == spec.diagonal_exact);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
  CHECK(es.eigenvalues().minCoeff() >= -1e-10 * H.trace());
}

TEST_CASE("points off the sphere are rejected with the offending row") {
  const auto spec = build_dot_kernel(activations::relu(), 10, 10);
  Eigen::MatrixXd X = sample_sphere(5, 10, std::uint64_t{1});
  X.row(3) *= 1.001;
  try {
    kernel_matrix(spec, X);
    FAIL("expected InputError");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
  }
  CHECK_THROWS_AS(kernel_matrix(spec, Eigen::MatrixXd::Ones(3, 9)), InputError);
}

TEST_CASE("tail traces") {
  const auto spec = build_dot_kernel(activations::relu(), 100, 30);
  const auto t1 = tail_traces(spec, 1);
  CHECK(t1.kappa_H == doctest::Approx(spec.diagonal_exact - spec.series[0] - spec.series[1]));
  CHECK(t1.kappa_H > 0.0);
  double m = 0.0;
  for (int k = 2; k <= 30; ++k) m += spec.xi[k] * spec.series[k];
  CHECK(t1.kappa_M == doctest::Approx(m));
  CHECK(tail_traces(spec, 30).kappa_M == 0.0);
  CHECK_THROWS_AS(tail_traces(spec, 31), InputError);
}

TEST_CASE("cyclic kernel is shift invariant and matches pointwise evaluation") {
  const int d = 7;
  const auto ck = make_cyclic(build_dot_kernel(activations::relu(), d, 30));
  const Eigen::MatrixXd X = sample_sphere(6, d, std::uint64_t{5});
  const Eigen::MatrixXd H = cyclic_kernel_matrix(ck, X);
  CHECK((H - H.transpose()).cwiseAbs().maxCoeff() == 0.0);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      const Eigen::VectorXd xi = X.row(i).transpose();
      const Eigen::VectorXd xj = X.row(j).transpose();
      const double v = cyclic_kernel_value(ck, xi, xj);
      if (i != j) CHECK(H(i, j) == doctest::Approx(v).epsilon(1e-12));
      for (int g = 1; g < d; ++g) {
        CHECK(cyclic_kernel_value(ck, cyclic_shift(xi, g), xj) == doctest::Approx(v).epsilon(1e-12));
      }
    }
  }
  // Diagonal: identity shift contributes h(1), the others the series.
  const Eigen::VectorXd x0 = X.row(0).transpose();
  double diag = ck.base.diagonal_exact;
  for (int g = 1; g < d; ++g) diag += kernel_value(ck.base, x0.dot(cyclic_shift(x0, g)) / d);
  CHECK(H(0, 0) == doctest::Approx(diag / d).epsilon(1e-12));
}

TEST_CASE("cyclic kernel matrix is PSD") {
  const auto ck = make_cyclic(build_dot_kernel(activations::relu(), 10, 30));
  const Eigen::MatrixXd X = sample_sphere(60, 10, std::uint64_t{8});
  const Eigen::MatrixXd H = cyclic_kernel_matrix(ck, X);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
  CHECK(es.eigenvalues().minCoeff() >= -1e-10 * H.trace());
}

TEST_CASE("property: kernel_cross agrees with kernel_value entrywise") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const int d = 3 + static_cast<int>(rng() % 60);
    const auto spec = build_dot_kernel(activations::relu(), d, 25);
    const Eigen::MatrixXd A = sample_sphere(4, d, rng);
    const Eigen::MatrixXd B = sample_sphere(5, d, rng);
    const Eigen::MatrixXd C = kernel_cross(spec, A, B);
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 5; ++j) CHECK(C(i, j) == doctest::Approx(kernel_value(spec, A.row(i).dot(B.row(j)) / d)));
    }
  }
}

TEST_CASE("scaling the activation scales the kernel quadratically") {
  const auto k1 = build_dot_kernel(activations::relu(), 30, 20);
  const auto k2 = build_dot_kernel(parse_activation("2*relu"), 30, 20);
  for (int k = 0; k <= 20; ++k) CHECK(k2.xi[k] == doctest::Approx(4.0 * k1.xi[k]).epsilon(1e-12));
  CHECK(k2.diagonal_exact == doctest::Approx(2.0));
}
