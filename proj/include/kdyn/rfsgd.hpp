#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "kdyn/activation.hpp"
#include "kdyn/spheredata.hpp"

namespace kdyn {

// f(x; a) = sum_i a_i phi_i(x) / sqrt(N), phi_i(x) = sigma(<w_i, x>) or its
// average over the d cyclic shifts of x. Only a is trained.
struct RFModel {
  Eigen::MatrixXd W;  // N x d, unit rows
  Eigen::VectorXd a;
  Activation sigma;
  bool cyclic = false;

  int num_features() const { return static_cast<int>(W.rows()); }
  int dim() const { return static_cast<int>(W.cols()); }
};

RFModel make_rf_model(int num_features, int d, Activation sigma, bool cyclic, std::uint64_t seed);

// Rows are phi(x_i); the 1/sqrt(N) scale is not applied.
Eigen::MatrixXd features(const RFModel& model, const Eigen::MatrixXd& X);

Eigen::VectorXd rf_predict(const RFModel& model, const Eigen::MatrixXd& Phi);

struct SGDConfig {
  double learning_rate = 0.1;
  int batch_size = 50;
  double momentum = 0.9;
  long steps = 1000;
  std::vector<long> eval_grid;  // iteration counts, increasing, <= steps
  std::uint64_t seed = 0;
};

void validate(const SGDConfig& cfg);

// Gradient-flow time reached after k heavy-ball steps with a step of
// learning_rate per unit time: eta/(1-beta) * (k - beta (1 - beta^k)/(1 - beta)).
double effective_time(const SGDConfig& cfg, long iteration);

struct SGDTrajectory {
  std::vector<long> iterations;
  std::vector<double> t_eff;
  std::vector<double> train;  // empty for the oracle world
  std::vector<double> test;
};

// Multi-pass minibatch SGD on 1/2 mean squared loss, shuffled epochs.
// Throws NumericalError when the train error exceeds 1e3 times its initial value.
SGDTrajectory sgd_empirical(RFModel& model, const Eigen::MatrixXd& Phi_train,
                            const Eigen::VectorXd& y, const Eigen::MatrixXd& Phi_test,
                            const Eigen::VectorXd& f_test, double sigma_eps2,
                            const SGDConfig& cfg);

// One-pass SGD with a fresh population batch at every step.
SGDTrajectory sgd_oracle(RFModel& model, const TargetFunction& f, double sigma_eps2,
                         const Eigen::MatrixXd& Phi_test, const Eigen::VectorXd& f_test,
                         const SGDConfig& cfg);

struct StepSize {
  double lambda_max = 0.0;
  double learning_rate = 0.0;
  double residual = 0.0;  // ||A v - lambda v|| / lambda at the last iterate
};

// Power iteration (100 steps) on a symmetric PSD matrix; learning_rate = c / lambda_max.
// Throws NumericalError if the relative residual stays above 1e-2.
StepSize default_step_size(const Eigen::MatrixXd& A, double c = 0.5, int iterations = 100);

}  // namespace kdyn
