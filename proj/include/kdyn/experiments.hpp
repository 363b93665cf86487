#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kdyn/config.hpp"
#include "kdyn/empiricalflow.hpp"
#include "kdyn/kernels.hpp"
#include "kdyn/rfsgd.hpp"
#include "kdyn/spheredata.hpp"

namespace kdyn {

using Metadata = std::vector<std::pair<std::string, std::string>>;

// Independent seed for (trial, purpose) pairs.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t trial, std::uint64_t purpose);

AnyKernel make_kernel(const ExperimentConfig& cfg);

// Everything shared by the trials of one flow experiment.
struct FlowSetup {
  AnyKernel kernel;
  TargetFunction target;
  int n = 0;
  int alpha = 0;  // 1 for the cyclic kernel
  // Degree norms of the part of the target the kernel can learn, and the
  // energy it never sees (non-invariant part under the cyclic kernel).
  std::vector<double> learnable_norms;
  double unlearnable = 0.0;
  double target_norm2 = 0.0;
};

FlowSetup make_flow_setup(const ExperimentConfig& cfg);

double setup_oracle_risk(const FlowSetup& s, double sigma_eps2, double t);

struct FlowTrial {
  std::vector<double> train;
  std::vector<double> test;
  std::vector<double> test_se;  // zero for the analytic method
};

FlowTrial run_flow_trial(const FlowSetup& setup, const ExperimentConfig& cfg, int trial,
                         std::span<const double> times);

// Trials, oracle overlay and plateau predictions on time_grid(cfg). Throws
// NumericalError if a train curve or the oracle curve increases by more than 1e-12.
ErrorCurves run_flow_experiment(const ExperimentConfig& cfg);

Metadata experiment_metadata(const std::string& command, const ExperimentConfig& cfg,
                             const Metadata& extra, bool with_timestamp = true);

// CSV at cfg.output plus an SVG plot next to it.
void write_flow_outputs(const ErrorCurves& curves, const ExperimentConfig& cfg,
                        bool with_timestamp = true);

struct RFCurves {
  std::vector<long> iterations;
  std::vector<double> t_eff;
  std::vector<std::vector<double>> train;   // [trial][eval]
  std::vector<std::vector<double>> test;    // [trial][eval]
  std::vector<std::vector<double>> oracle;  // [trial][eval]
  std::vector<double> plateau_pred;
  double learning_rate = 0.0;
  Metadata metadata;
};

std::vector<long> iteration_grid(long steps, int points);

RFCurves run_rf_experiment(const ExperimentConfig& cfg);
void write_rf_outputs(const RFCurves& curves, const ExperimentConfig& cfg, bool with_timestamp = true);

struct AugmentReport {
  int d = 0;
  int n = 0;
  std::vector<double> times;
  std::vector<double> discrepancy;  // max over test points, per time
  double max_discrepancy = 0.0;
};

// Cyclic-kernel flow on (X, y) with rate d/n against the dot-kernel flow on
// the d-fold augmented data with rate 1/n. Refuses when n*d > 2000.
AugmentReport augment_check(int d, int n, const Activation& sigma, std::span<const double> times,
                            std::uint64_t seed, int test_points = 20, int K = 30);

struct StepsizeReport {
  int d = 0;
  int n = 0;
  StepSize dot;
  StepSize cyclic;
  StepSize augmented;  // lambda_max of the augmented matrix over n; NaN when skipped
  double augmented_ratio = 0.0;
  bool ratio_in_band = false;  // augmented / dot within [0.5 d, 1.5 d]
};

StepsizeReport stepsize_report(const Activation& sigma, int d, int n, std::uint64_t seed, int K = 30);

}  // namespace kdyn
