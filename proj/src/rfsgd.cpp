#include "kdyn/rfsgd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "kdyn/errors.hpp"
#include "kdyn/kernels.hpp"
#include "kdyn/parallel.hpp"

namespace kdyn {

namespace {

void apply_activation(const Activation& sigma, Eigen::MatrixXd& Z) {
  double* p = Z.data();
  const auto size = static_cast<std::size_t>(Z.size());
  parallel_for(size, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) p[i] = sigma(p[i]);
  });
}

double mean_sq(const Eigen::VectorXd& r) { return r.squaredNorm() / static_cast<double>(r.size()); }

}  // namespace

RFModel make_rf_model(int num_features, int d, Activation sigma, bool cyclic, std::uint64_t seed) {
  if (num_features < 1) throw InputError("random-feature model needs N >= 1");
  RFModel m;
  auto rng = make_rng(seed, 2);
  m.W = sample_sphere(num_features, d, rng) / std::sqrt(static_cast<double>(d));
  m.a = Eigen::VectorXd::Zero(num_features);
  m.sigma = std::move(sigma);
  m.cyclic = cyclic;
  return m;
}

Eigen::MatrixXd features(const RFModel& model, const Eigen::MatrixXd& X) {
  check_on_sphere(X, model.dim());
  if (!model.cyclic) {
    Eigen::MatrixXd Z = X * model.W.transpose();
    apply_activation(model.sigma, Z);
    return Z;
  }
  const int d = model.dim();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(X.rows(), model.num_features());
  for (int g = 0; g < d; ++g) {
    Eigen::MatrixXd Z = cyclic_shift_rows(X, g) * model.W.transpose();
    apply_activation(model.sigma, Z);
    out += Z;
  }
  return out / static_cast<double>(d);
}

Eigen::VectorXd rf_predict(const RFModel& model, const Eigen::MatrixXd& Phi) {
  return Phi * model.a / std::sqrt(static_cast<double>(model.num_features()));
}

void validate(const SGDConfig& cfg) {
  if (!(cfg.learning_rate >= 0.0) || !std::isfinite(cfg.learning_rate)) {
    throw ConfigError("learning_rate must be finite and nonnegative");
  }
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (cfg.steps < 0) throw ConfigError("steps must be >= 0");
  for (std::size_t i = 0; i < cfg.eval_grid.size(); ++i) {
    if (cfg.eval_grid[i] < 0 || cfg.eval_grid[i] > cfg.steps) {
      throw ConfigError("eval_grid entries must lie in [0, steps]");
    }
    if (i > 0 && cfg.eval_grid[i] <= cfg.eval_grid[i - 1]) {
      throw ConfigError("eval_grid must be strictly increasing");
    }
  }
}

double effective_time(const SGDConfig& cfg, long k) {
  const double b = cfg.momentum;
  const double kk = static_cast<double>(k);
  if (b == 0.0) return cfg.learning_rate * kk;
  return cfg.learning_rate / (1.0 - b) * (kk - b * (1.0 - std::pow(b, kk)) / (1.0 - b));
}

namespace {

// Shared heavy-ball loop; next_batch fills (Phi_B, y_B) for one step.
template <class NextBatch, class Record>
void heavy_ball(RFModel& model, const SGDConfig& cfg, NextBatch&& next_batch, Record&& record) {
  validate(cfg);
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(model.num_features()));
  Eigen::VectorXd v = Eigen::VectorXd::Zero(model.num_features());
  Eigen::MatrixXd Phi_B;
  Eigen::VectorXd y_B;
  std::size_t next_eval = 0;
  auto maybe_record = [&](long it) {
    while (next_eval < cfg.eval_grid.size() && cfg.eval_grid[next_eval] == it) {
      record(it);
      ++next_eval;
    }
  };
  maybe_record(0);
  for (long it = 1; it <= cfg.steps; ++it) {
    next_batch(Phi_B, y_B);
    const Eigen::VectorXd resid = Phi_B * model.a * inv_sqrt_n - y_B;
    const Eigen::VectorXd grad = Phi_B.transpose() * resid * (inv_sqrt_n / static_cast<double>(y_B.size()));
    v = cfg.momentum * v + grad;
    model.a -= cfg.learning_rate * v;
    maybe_record(it);
  }
}

}  // namespace

SGDTrajectory sgd_empirical(RFModel& model, const Eigen::MatrixXd& Phi_train,
                            const Eigen::VectorXd& y, const Eigen::MatrixXd& Phi_test,
                            const Eigen::VectorXd& f_test, double sigma_eps2,
                            const SGDConfig& cfg) {
  const auto n = static_cast<int>(Phi_train.rows());
  if (n == 0) throw InputError("empty training set");
  if (y.size() != n) throw InputError("responses do not match training features");
  const int b = std::min(cfg.batch_size, n);
  auto rng = make_rng(cfg.seed, 3);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  int pos = 0;
  SGDTrajectory tr;
  double initial = -1.0;
  heavy_ball(
      model, cfg,
      [&](Eigen::MatrixXd& Phi_B, Eigen::VectorXd& y_B) {
        Phi_B.resize(b, Phi_train.cols());
        y_B.resize(b);
        for (int r = 0; r < b; ++r) {
          if (pos == n) {
            std::shuffle(order.begin(), order.end(), rng);
            pos = 0;
          }
          const int i = order[static_cast<std::size_t>(pos++)];
          Phi_B.row(r) = Phi_train.row(i);
          y_B(r) = y(i);
        }
      },
      [&](long it) {
        const double train = mean_sq(rf_predict(model, Phi_train) - y);
        if (initial < 0.0) initial = it == 0 ? train : mean_sq(y);
        if (!std::isfinite(train) || train > 1e3 * std::max(initial, 1e-300)) {
          std::ostringstream os;
          os << "SGD diverged at iteration " << it << ": train error " << train << " vs initial "
             << initial << "; reduce the learning rate below 1/lambda_max";
          throw NumericalError(os.str());
        }
        tr.iterations.push_back(it);
        tr.t_eff.push_back(effective_time(cfg, it));
        tr.train.push_back(train);
        tr.test.push_back(Phi_test.rows() ? mean_sq(rf_predict(model, Phi_test) - f_test) + sigma_eps2
                                          : std::numeric_limits<double>::quiet_NaN());
      });
  return tr;
}

SGDTrajectory sgd_oracle(RFModel& model, const TargetFunction& f, double sigma_eps2,
                         const Eigen::MatrixXd& Phi_test, const Eigen::VectorXd& f_test,
                         const SGDConfig& cfg) {
  if (Phi_test.rows() == 0) throw InputError("oracle SGD needs a test set");
  auto rng = make_rng(cfg.seed, 4);
  std::normal_distribution<double> noise(0.0, std::sqrt(std::max(sigma_eps2, 0.0)));
  SGDTrajectory tr;
  double initial = -1.0;
  heavy_ball(
      model, cfg,
      [&](Eigen::MatrixXd& Phi_B, Eigen::VectorXd& y_B) {
        const Eigen::MatrixXd X = sample_sphere(cfg.batch_size, model.dim(), rng);
        Phi_B = features(model, X);
        y_B = eval_target(f, X);
        if (sigma_eps2 > 0.0) {
          for (Eigen::Index i = 0; i < y_B.size(); ++i) y_B(i) += noise(rng);
        }
      },
      [&](long it) {
        const double test = mean_sq(rf_predict(model, Phi_test) - f_test) + sigma_eps2;
        if (initial < 0.0) initial = it == 0 ? test : mean_sq(f_test) + sigma_eps2;
        if (!std::isfinite(test) || test > 1e3 * std::max(initial, 1e-300)) {
          std::ostringstream os;
          os << "SGD diverged at iteration " << it << ": test error " << test << " vs initial "
             << initial << "; reduce the learning rate below 1/lambda_max";
          throw NumericalError(os.str());
        }
        tr.iterations.push_back(it);
        tr.t_eff.push_back(effective_time(cfg, it));
        tr.test.push_back(test);
      });
  return tr;
}

StepSize default_step_size(const Eigen::MatrixXd& A, double c, int iterations) {
  const Eigen::Index n = A.rows();
  if (n == 0 || A.cols() != n) throw InputError("step-size estimate needs a square nonempty matrix");
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n) / std::sqrt(static_cast<double>(n));
  // Break exact orthogonality to the top eigenvector.
  for (Eigen::Index i = 0; i < n; ++i) v(i) += 1e-3 * std::sin(1.0 + static_cast<double>(i));
  v.normalize();
  double lambda = 0.0;
  Eigen::VectorXd w;
  for (int it = 0; it < iterations; ++it) {
    w = A * v;
    lambda = v.dot(w);
    const double nrm = w.norm();
    if (nrm == 0.0) throw NumericalError("power iteration hit the zero vector");
    v = w / nrm;
  }
  w = A * v;
  lambda = v.dot(w);
  StepSize s;
  s.lambda_max = lambda;
  s.residual = (w - lambda * v).norm() / std::max(std::abs(lambda), 1e-300);
  if (!(lambda > 0.0) || s.residual > 1e-2) {
    std::ostringstream os;
    os << "power iteration did not converge: lambda " << lambda << ", relative residual " << s.residual;
    throw NumericalError(os.str());
  }
  s.learning_rate = c / lambda;
  return s;
}

}  // namespace kdyn
