#include "kdyn/empiricalflow.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

#include "kdyn/errors.hpp"

namespace kdyn {

namespace {

// (1 - exp(-t r lambda)) / lambda, continuous at lambda = 0.
inline double phi(double lambda, double tr) {
  const double x = tr * lambda;
  if (std::abs(x) < 1e-300 || lambda == 0.0) return tr;
  return -std::expm1(-x) / lambda;
}

Eigen::VectorXd rotated_phi(const FlowSolution& sol, double t) {
  if (!(t >= 0.0)) throw InputError("flow time must be nonnegative");
  const double tr = t * sol.rate;
  Eigen::VectorXd b(sol.n);
  for (int i = 0; i < sol.n; ++i) b(i) = phi(sol.eigenvalues(i), tr) * sol.rotated_response(i);
  return b;
}

}  // namespace

FlowSolution solve_flow(const Eigen::MatrixXd& H, const Eigen::VectorXd& y, double rate) {
  const Eigen::Index n = H.rows();
  if (n == 0 || H.cols() != n) throw InputError("kernel matrix must be square and nonempty");
  if (y.size() != n) throw InputError("response length does not match kernel matrix");
  if (!y.allFinite()) throw InputError("response contains non-finite values");
  const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
  const double asym = (H - H.transpose()).cwiseAbs().maxCoeff();
  if (!(asym <= 1e-10 * scale)) {
    std::ostringstream os;
    os << "kernel matrix not symmetric (max |H - H^T| = " << asym << ")";
    throw InputError(os.str());
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
  if (es.info() != Eigen::Success) throw NumericalError("symmetric eigensolver failed");
  FlowSolution sol;
  sol.n = static_cast<int>(n);
  sol.rate = std::isnan(rate) ? 1.0 / static_cast<double>(n) : rate;
  sol.eigenvalues = es.eigenvalues();
  const double floor = -1e-10 * std::max(H.trace(), 1e-300);
  for (Eigen::Index i = 0; i < n; ++i) {
    double& l = sol.eigenvalues(i);
    if (l < 0.0) {
      if (l < floor) {
        std::ostringstream os;
        os.precision(17);
        os << "kernel matrix has negative eigenvalue " << l << " (trace " << H.trace() << ")";
        throw NumericalError(os.str());
      }
      l = 0.0;
    }
  }
  sol.eigenbasis = es.eigenvectors();
  sol.rotated_response = sol.eigenbasis.transpose() * y;
  return sol;
}

double train_error(const FlowSolution& sol, double t) {
  if (!(t >= 0.0)) throw InputError("flow time must be nonnegative");
  double s = 0.0;
  for (int i = 0; i < sol.n; ++i) {
    const double r = sol.rotated_response(i);
    s += std::exp(-2.0 * t * sol.rate * sol.eigenvalues(i)) * r * r;
  }
  return s / sol.n;
}

Eigen::VectorXd fitted_values(const FlowSolution& sol, double t) {
  Eigen::VectorXd g(sol.n);
  for (int i = 0; i < sol.n; ++i) {
    g(i) = -std::expm1(-t * sol.rate * sol.eigenvalues(i)) * sol.rotated_response(i);
  }
  return sol.eigenbasis * g;
}

Eigen::VectorXd rotated_coefficients(const FlowSolution& sol, double t) { return rotated_phi(sol, t); }

Eigen::VectorXd coefficients(const FlowSolution& sol, double t) {
  return sol.eigenbasis * rotated_phi(sol, t);
}

Eigen::VectorXd predict(const FlowSolution& sol, const AnyKernel& kernel,
                        const Eigen::MatrixXd& X_train, const Eigen::MatrixXd& X_test, double t) {
  if (X_train.rows() != sol.n) throw InputError("training points do not match the flow solution");
  return cross(kernel, X_test, X_train) * coefficients(sol, t);
}

McTestSet prepare_test_set(const FlowSolution& sol, const AnyKernel& kernel,
                           const Eigen::MatrixXd& X_train, const Eigen::MatrixXd& X_test,
                           const Eigen::VectorXd& f_test, double sigma_eps2) {
  if (X_test.rows() == 0) throw InputError("empty test set");
  if (f_test.size() != X_test.rows()) throw InputError("test targets do not match test points");
  if (X_train.rows() != sol.n) throw InputError("training points do not match the flow solution");
  McTestSet ts;
  ts.cross_basis = cross(kernel, X_test, X_train) * sol.eigenbasis;
  ts.f = f_test;
  ts.sigma_eps2 = sigma_eps2;
  return ts;
}

McEstimate test_error_mc(const FlowSolution& sol, const McTestSet& test, double t) {
  if (test.f.size() == 0) throw InputError("empty test set");
  const Eigen::VectorXd resid = test.f - test.cross_basis * rotated_phi(sol, t);
  const Eigen::ArrayXd sq = resid.array().square();
  const double m = static_cast<double>(sq.size());
  McEstimate e;
  const double mean = sq.mean();
  e.mean = mean + test.sigma_eps2;
  if (sq.size() > 1) {
    const double var = (sq - mean).square().sum() / (m - 1.0);
    e.standard_error = std::sqrt(var / m);
  }
  return e;
}

Eigen::VectorXd build_E_vector(const AnyKernel& kernel, const TargetFunction& f,
                               const Eigen::MatrixXd& X) {
  if (!f.is_ridge()) {
    throw InputError("analytic test error supports ridge targets only; use the Monte Carlo estimate");
  }
  const KernelSpectrum& spec = base_spectrum(kernel);
  if (f.d != spec.d) throw InputError("target dimension does not match kernel");
  check_on_sphere(X, spec.d);
  const auto c = ridge_profile_coefficients(f, spec.K);
  const std::size_t top = std::min(c.size(), spec.xi.size());
  std::vector<double> e(top);
  for (std::size_t k = 0; k < top; ++k) e[k] = c[k] * spec.series[k];
  const double dd = spec.d;
  const double root = std::sqrt(dd);
  auto at = [&](double coord) { return spec.basis->series(e, std::clamp(root * coord, -dd, dd)); };
  Eigen::VectorXd E(X.rows());
  const bool cyc = is_cyclic(kernel);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    if (cyc) {
      double s = 0.0;
      for (Eigen::Index j = 0; j < X.cols(); ++j) s += at(X(i, j));
      E(i) = s / dd;
    } else {
      E(i) = at(X(i, 0));
    }
  }
  return E;
}

Eigen::MatrixXd build_M_matrix(const AnyKernel& kernel, const Eigen::MatrixXd& X) {
  const KernelSpectrum& spec = base_spectrum(kernel);
  std::vector<double> xi2(spec.xi.size());
  double diag = 0.0;
  for (std::size_t k = 0; k < xi2.size(); ++k) {
    xi2[k] = spec.xi[k] * spec.xi[k];
    diag += xi2[k] * spec.multiplicity[k];
  }
  KernelSpectrum sq = spectrum_from_eigenvalues(spec.d, std::move(xi2), diag, spec.activation_id + "^2");
  if (is_cyclic(kernel)) return cyclic_kernel_matrix(make_cyclic(std::move(sq)), X);
  return kernel_matrix(sq, X);
}

AnalyticTestSet prepare_analytic(const FlowSolution& sol, const Eigen::VectorXd& E,
                                 const Eigen::MatrixXd& M, double target_norm2,
                                 double sigma_eps2) {
  if (E.size() != sol.n || M.rows() != sol.n || M.cols() != sol.n) {
    throw InputError("E/M dimensions do not match the flow solution");
  }
  AnalyticTestSet an;
  an.rotated_E = sol.eigenbasis.transpose() * E;
  an.rotated_M = sol.eigenbasis.transpose() * M * sol.eigenbasis;
  an.target_norm2 = target_norm2;
  an.sigma_eps2 = sigma_eps2;
  return an;
}

double test_error_analytic(const FlowSolution& sol, const AnalyticTestSet& an, double t) {
  if (an.rotated_E.size() != sol.n) throw InputError("analytic test set does not match the flow");
  const Eigen::VectorXd b = rotated_phi(sol, t);
  return an.target_norm2 - 2.0 * b.dot(an.rotated_E) + b.dot(an.rotated_M * b) + an.sigma_eps2;
}

PlateauPrediction theoretical_plateaus(const KernelSpectrum& spec, std::span<const double> norms,
                                       double sigma_eps2, double t, double n, int alpha) {
  if (!(t > 1.0) || !(n > 1.0)) throw InputError("plateau prediction needs t, n > 1");
  const double logd = std::log(static_cast<double>(spec.d));
  const double lt = std::log(t) / logd;
  const double ln = std::log(n) / logd + alpha;
  PlateauPrediction p;
  p.alpha = alpha;
  p.j = static_cast<int>(std::floor(lt));
  p.s = static_cast<int>(std::floor(ln));
  auto near_int = [](double v) { return std::abs(v - std::round(v)) < plateau_window_delta; };
  p.degenerate_window = near_int(lt) || near_int(ln);
  const int level = std::min(p.j, p.s);
  p.predicted_test = sigma_eps2;
  for (std::size_t k = 0; k < norms.size(); ++k) {
    if (static_cast<int>(k) > level) p.predicted_test += norms[k];
  }
  const int m = std::clamp(level, 0, spec.K);
  const double kappa = tail_traces(spec, m).kappa_H;
  const double x = t * kappa / (n * std::pow(spec.d, alpha));
  const double dd = spec.d;
  if (x <= std::pow(dd, -plateau_window_delta)) {
    p.train_regime = TrainRegime::plateau;
    p.predicted_train = p.predicted_test;
  } else if (x >= std::pow(dd, plateau_window_delta)) {
    p.train_regime = TrainRegime::zero;
    p.predicted_train = 0.0;
  } else {
    p.train_regime = TrainRegime::transition;
    p.predicted_train = std::numeric_limits<double>::quiet_NaN();
  }
  return p;
}

std::vector<double> column_mean(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  std::vector<double> m(rows.front().size(), 0.0);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < m.size(); ++i) m[i] += r[i];
  }
  for (double& v : m) v /= static_cast<double>(rows.size());
  return m;
}

std::vector<double> column_std(const std::vector<std::vector<double>>& rows) {
  if (rows.size() < 2) return {};
  const auto m = column_mean(rows);
  std::vector<double> s(m.size(), 0.0);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < m.size(); ++i) s[i] += (r[i] - m[i]) * (r[i] - m[i]);
  }
  for (double& v : s) v = std::sqrt(v / static_cast<double>(rows.size() - 1));
  return s;
}

std::vector<double> ErrorCurves::train_mean() const { return column_mean(train); }
std::vector<double> ErrorCurves::test_mean() const { return column_mean(test); }
std::vector<double> ErrorCurves::train_std() const { return column_std(train); }
std::vector<double> ErrorCurves::test_std() const { return column_std(test); }

}  // namespace kdyn
