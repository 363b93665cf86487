#include <doctest.h>

#include <cmath>

#include "kdyn/errors.hpp"
#include "kdyn/kernels.hpp"
#include "kdyn/rfsgd.hpp"
#include "kdyn/spheredata.hpp"
#include "test_util.hpp"

using namespace kdyn;
using kdyn::testing::mean_se;

TEST_CASE("feature directions are unit vectors; identity features are inner products") {
  const RFModel m = make_rf_model(50, 12, activations::identity(), false, 3);
  for (int i = 0; i < 50; ++i) CHECK(std::abs(m.W.row(i).norm() - 1.0) < 1e-10);
  CHECK(m.a.norm() == 0.0);
  const Eigen::MatrixXd x = m.W.row(0) * std::sqrt(12.0);
  const Eigen::MatrixXd Phi = features(m, x);
  CHECK(Phi(0, 0) == doctest::Approx(std::sqrt(12.0)).epsilon(1e-14));
  CHECK(Phi(0, 7) == doctest::Approx(m.W.row(7).dot(x.row(0))).epsilon(1e-14));
}

TEST_CASE("cyclic features are shift invariant") {
  const int d = 9;
  const RFModel m = make_rf_model(40, d, activations::relu(), true, 4);
  const Eigen::MatrixXd X = sample_sphere(5, d, std::uint64_t{5});
  const Eigen::MatrixXd P0 = features(m, X);
  for (int g = 1; g < d; ++g) CHECK((features(m, cyclic_shift_rows(X, g)) - P0).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("random features average to the kernel") {
  const int d = 20;
  const auto spec = build_dot_kernel(activations::relu(), d, 30);
  const RFModel m = make_rf_model(100000, d, activations::relu(), false, 6);
  const Eigen::MatrixXd X = sample_sphere(4, d, std::uint64_t{7});
  const Eigen::MatrixXd Phi = features(m, X);
  for (int i = 0; i < 4; ++i) {
    for (int j = i; j < 4; ++j) {
      const auto e = mean_se(Phi.row(i).cwiseProduct(Phi.row(j)).transpose());
      const double h = i == j ? spec.diagonal_exact : kernel_value(spec, X.row(i).dot(X.row(j)) / d);
      CHECK(std::abs(e.mean - h) <= 3.0 * e.se);
    }
  }
}

namespace {

struct Problem {
  int d = 10, n = 20, N = 200;
  TargetFunction f = parse_target("quadratic", 10);
  Dataset ds = make_dataset(f, n, 0.0, 11);
  RFModel model = make_rf_model(N, d, activations::relu(), false, 12);
  Eigen::MatrixXd Xt = sample_sphere(300, d, std::uint64_t{13});
  Eigen::VectorXd ft = eval_target(f, Xt);
  Eigen::MatrixXd Phi = features(model, ds.X);
  Eigen::MatrixXd Phit = features(model, Xt);
};

}  // namespace

TEST_CASE("zero learning rate leaves the model at zero") {
  Problem p;
  SGDConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.steps = 30;
  cfg.eval_grid = {0, 10, 30};
  RFModel m = p.model;
  const auto tr = sgd_empirical(m, p.Phi, p.ds.y, p.Phit, p.ft, 0.2, cfg);
  for (double e : tr.train) CHECK(e == doctest::Approx(p.ds.y.squaredNorm() / p.n));
  for (double e : tr.test) CHECK(e == doctest::Approx(p.ft.squaredNorm() / 300 + 0.2));
  RFModel m2 = p.model;
  const auto orc = sgd_oracle(m2, p.f, 0.2, p.Phit, p.ft, cfg);
  CHECK(orc.train.empty());
  for (double e : orc.test) CHECK(e == doctest::Approx(p.ft.squaredNorm() / 300 + 0.2));
}

TEST_CASE("full-batch SGD without momentum is gradient descent") {
  Problem p;
  SGDConfig cfg;
  cfg.learning_rate = 0.3;
  cfg.momentum = 0.0;
  cfg.batch_size = p.n;
  cfg.steps = 5;
  cfg.eval_grid = {5};
  RFModel m = p.model;
  sgd_empirical(m, p.Phi, p.ds.y, p.Phit, p.ft, 0.0, cfg);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(p.N);
  const double s = 1.0 / std::sqrt(static_cast<double>(p.N));
  for (int k = 0; k < 5; ++k) {
    const Eigen::VectorXd r = p.Phi * a * s - p.ds.y;
    a -= cfg.learning_rate * s / p.n * (p.Phi.transpose() * r);
  }
  CHECK((m.a - a).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, a.cwiseAbs().maxCoeff()));
}

TEST_CASE("overparameterized models interpolate") {
  Problem p;
  const Eigen::MatrixXd Hbar = p.Phi * p.Phi.transpose() / (static_cast<double>(p.N) * p.n);
  SGDConfig cfg;
  cfg.learning_rate = default_step_size(Hbar, 1.0).learning_rate;
  cfg.momentum = 0.9;
  cfg.batch_size = p.n;
  cfg.steps = 20000;
  cfg.eval_grid = {0, 20000};
  RFModel m = p.model;
  const auto tr = sgd_empirical(m, p.Phi, p.ds.y, p.Phit, p.ft, 0.0, cfg);
  CHECK(tr.train.back() < 1e-6 * tr.train.front());
}

TEST_CASE("SGD is deterministic given the seed") {
  Problem p;
  SGDConfig cfg;
  cfg.learning_rate = 0.2;
  cfg.batch_size = 3;
  cfg.steps = 50;
  cfg.eval_grid = {0, 7, 50};
  cfg.seed = 99;
  RFModel a = p.model, b = p.model;
  const auto ta = sgd_empirical(a, p.Phi, p.ds.y, p.Phit, p.ft, 0.0, cfg);
  const auto tb = sgd_empirical(b, p.Phi, p.ds.y, p.Phit, p.ft, 0.0, cfg);
  CHECK(ta.train == tb.train);
  CHECK(ta.test == tb.test);
  CHECK(a.a == b.a);
  RFModel c = p.model, e = p.model;
  CHECK(sgd_oracle(c, p.f, 0.1, p.Phit, p.ft, cfg).test == sgd_oracle(e, p.f, 0.1, p.Phit, p.ft, cfg).test);
}

TEST_CASE("divergence is detected") {
  Problem p;
  SGDConfig cfg;
  cfg.learning_rate = 500.0;
  cfg.momentum = 0.0;
  cfg.batch_size = p.n;
  cfg.steps = 200;
  for (long i = 0; i <= 200; i += 10) cfg.eval_grid.push_back(i);
  RFModel m = p.model;
  CHECK_THROWS_AS(sgd_empirical(m, p.Phi, p.ds.y, p.Phit, p.ft, 0.0, cfg), NumericalError);
}

TEST_CASE("config validation") {
  SGDConfig cfg;
  cfg.momentum = 1.0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg.momentum = 0.5;
  cfg.batch_size = 0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg.batch_size = 1;
  cfg.eval_grid = {0, 5, 5};
  CHECK_THROWS_AS(validate(cfg), ConfigError);
}

TEST_CASE("effective time matches the heavy-ball displacement under a constant gradient") {
  SGDConfig cfg;
  cfg.learning_rate = 0.1;
  for (double beta : {0.0, 0.5, 0.9}) {
    cfg.momentum = beta;
    double v = 0.0, x = 0.0;
    for (long k = 1; k <= 300; ++k) {
      v = beta * v + 1.0;
      x += cfg.learning_rate * v;
      CHECK(effective_time(cfg, k) == doctest::Approx(x).epsilon(1e-12));
    }
  }
}

TEST_CASE("step size from power iteration") {
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(6, 6);
  const auto s = default_step_size(I);
  CHECK(s.lambda_max == doctest::Approx(1.0));
  CHECK(s.learning_rate == doctest::Approx(0.5));
  CHECK(default_step_size(10.0 * I).learning_rate == doctest::Approx(0.05));
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2, 2);
  A(0, 0) = 1.0;
  A(1, 1) = -1.0;
  CHECK_THROWS_AS(default_step_size(A), NumericalError);
  const auto spec = build_dot_kernel(activations::relu(), 12, 30);
  const Eigen::MatrixXd H = kernel_matrix(spec, sample_sphere(50, 12, std::uint64_t{1})) / 50.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
  CHECK(default_step_size(H).lambda_max == doctest::Approx(es.eigenvalues().maxCoeff()).epsilon(1e-6));
}

TEST_CASE("oracle SGD follows empirical SGD during the first pass") {
  const int d = 20, n = 400, N = 2000, seeds = 10;
  const auto f = parse_target("quadratic", d);
  SGDConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.batch_size = 10;
  cfg.steps = 39;
  cfg.eval_grid = {10, 20, 39};
  std::vector<std::vector<double>> emp, orc;
  for (int s = 0; s < seeds; ++s) {
    const auto ds = make_dataset(f, n, 0.0, 100 + s);
    RFModel m = make_rf_model(N, d, activations::relu(), false, 200 + s);
    const Eigen::MatrixXd Xt = sample_sphere(500, d, static_cast<std::uint64_t>(300 + s));
    const Eigen::VectorXd ft = eval_target(f, Xt);
    const Eigen::MatrixXd Pt = features(m, Xt);
    cfg.seed = 400 + s;
    RFModel a = m, b = m;
    emp.push_back(sgd_empirical(a, features(m, ds.X), ds.y, Pt, ft, 0.0, cfg).test);
    orc.push_back(sgd_oracle(b, f, 0.0, Pt, ft, cfg).test);
  }
  for (std::size_t i = 0; i < cfg.eval_grid.size(); ++i) {
    Eigen::VectorXd e(seeds), o(seeds);
    for (int s = 0; s < seeds; ++s) {
      e(s) = emp[s][i];
      o(s) = orc[s][i];
    }
    const auto me = mean_se(e), mo = mean_se(o);
    CHECK(std::abs(me.mean - mo.mean) <= 2.0 * std::hypot(me.se, mo.se));
  }
}
