#pragma once

#include <optional>
#include <span>
#include <vector>

#include "kdyn/kernels.hpp"

namespace kdyn {

// Risk of the population-loss gradient flow f_t = (I - exp(-t H)) f started at 0.
struct OracleCurve {
  std::vector<double> times;
  std::vector<double> risk;
  std::optional<std::vector<double>> l2_to_projection;
};

// sum_k exp(-2 t xi_k) ||P_k f||^2 + sigma_eps2. Degrees beyond the spectrum
// (or beyond the norms) contribute their full norm: the kernel cannot learn them.
double oracle_risk(std::span<const double> xi, std::span<const double> norms, double sigma_eps2,
                   double t);
double oracle_risk(const KernelSpectrum& spec, std::span<const double> norms, double sigma_eps2,
                   double t);

// ||f_t - P_{<=j} f||^2.
double oracle_l2_distance(const KernelSpectrum& spec, std::span<const double> norms, int j,
                          double t);

// Throws NumericalError if the computed risk increases anywhere by more than 1e-12.
OracleCurve oracle_curve(const KernelSpectrum& spec, std::span<const double> norms,
                         double sigma_eps2, std::span<const double> times,
                         std::optional<int> level = std::nullopt);

}  // namespace kdyn
