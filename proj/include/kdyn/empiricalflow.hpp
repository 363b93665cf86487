#pragma once

#include <Eigen/Dense>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "kdyn/kernels.hpp"
#include "kdyn/spheredata.hpp"

namespace kdyn {

// Exact solution of u' = -rate * H (u - y), u(0) = 0, through one symmetric
// eigendecomposition: u(t) = (I - exp(-t rate H)) y. The default rate is 1/n.
struct FlowSolution {
  Eigen::VectorXd eigenvalues;       // ascending, clamped at 0
  Eigen::MatrixXd eigenbasis;        // columns are eigenvectors
  Eigen::VectorXd rotated_response;  // eigenbasis^T y
  int n = 0;
  double rate = 0.0;
};

FlowSolution solve_flow(const Eigen::MatrixXd& H, const Eigen::VectorXd& y,
                        double rate = std::numeric_limits<double>::quiet_NaN());

// (1/n) ||u(t) - y||^2.
double train_error(const FlowSolution& sol, double t);

// u(t), the fitted values on the training points.
Eigen::VectorXd fitted_values(const FlowSolution& sol, double t);

// a(t) = H^{-1} u(t) computed as V diag(phi(lambda)) V^T y with
// phi(lambda) = (1 - exp(-t rate lambda)) / lambda and phi(0) = t rate.
Eigen::VectorXd coefficients(const FlowSolution& sol, double t);
// phi(lambda_i) * rotated_response_i, the coefficients in the eigenbasis.
Eigen::VectorXd rotated_coefficients(const FlowSolution& sol, double t);

// cross(X_test, X_train) * a(t).
Eigen::VectorXd predict(const FlowSolution& sol, const AnyKernel& kernel,
                        const Eigen::MatrixXd& X_train, const Eigen::MatrixXd& X_test, double t);

// Held-out points prepared for evaluation across a whole time grid.
struct McTestSet {
  Eigen::MatrixXd cross_basis;  // cross(X_test, X_train) * eigenbasis
  Eigen::VectorXd f;            // noiseless target values
  double sigma_eps2 = 0.0;
};

McTestSet prepare_test_set(const FlowSolution& sol, const AnyKernel& kernel,
                           const Eigen::MatrixXd& X_train, const Eigen::MatrixXd& X_test,
                           const Eigen::VectorXd& f_test, double sigma_eps2);

struct McEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
};

// Mean of (f(x) - prediction(x))^2 over the test points, plus sigma_eps2.
McEstimate test_error_mc(const FlowSolution& sol, const McTestSet& test, double t);

// E_i = E_x[f(x) H(x, x_i)] for a ridge target.
Eigen::VectorXd build_E_vector(const AnyKernel& kernel, const TargetFunction& f,
                               const Eigen::MatrixXd& X);
// M_ij = E_x[H(x, x_i) H(x, x_j)], the kernel with eigenvalues xi_k^2 for
// degrees k <= K. The diagonal is the full truncated series.
Eigen::MatrixXd build_M_matrix(const AnyKernel& kernel, const Eigen::MatrixXd& X);

struct AnalyticTestSet {
  Eigen::VectorXd rotated_E;  // V^T E
  Eigen::MatrixXd rotated_M;  // V^T M V
  double target_norm2 = 0.0;
  double sigma_eps2 = 0.0;
};

AnalyticTestSet prepare_analytic(const FlowSolution& sol, const Eigen::VectorXd& E,
                                 const Eigen::MatrixXd& M, double target_norm2,
                                 double sigma_eps2);

// ||f||^2 - 2 a^T E + a^T M a + sigma_eps2.
double test_error_analytic(const FlowSolution& sol, const AnalyticTestSet& an, double t);

enum class TrainRegime { plateau, transition, zero };

struct PlateauPrediction {
  int j = 0;
  int s = 0;
  int alpha = 0;
  bool degenerate_window = false;
  double predicted_test = 0.0;
  TrainRegime train_regime = TrainRegime::transition;
  // Equal to predicted_test on the plateau, 0 in the interpolation regime,
  // NaN in between.
  double predicted_train = 0.0;
};

inline constexpr double plateau_window_delta = 0.1;

PlateauPrediction theoretical_plateaus(const KernelSpectrum& spec, std::span<const double> norms,
                                       double sigma_eps2, double t, double n, int alpha);

// Per-trial error traces on a shared time grid, with aggregate statistics.
struct ErrorCurves {
  std::vector<double> times;
  std::vector<std::vector<double>> train;  // [trial][time]
  std::vector<std::vector<double>> test;   // [trial][time]
  std::vector<double> oracle;
  std::vector<double> plateau_pred;
  std::map<std::string, std::string> metadata;

  int trials() const { return static_cast<int>(train.size()); }
  std::vector<double> train_mean() const;
  std::vector<double> test_mean() const;
  // Sample standard deviation; empty when fewer than two trials.
  std::vector<double> train_std() const;
  std::vector<double> test_std() const;
};

std::vector<double> column_mean(const std::vector<std::vector<double>>& rows);
std::vector<double> column_std(const std::vector<std::vector<double>>& rows);

}  // namespace kdyn
