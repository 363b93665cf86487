#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "kdyn/activation.hpp"

namespace kdyn {

// f(x) = sum_j a_j He_j(x_1).
struct RidgeHermite {
  std::vector<double> a;
};

// f(x) = (sum_i x_i + sum_i x_i x_{i+1} + sum_i x_i x_{i+1} x_{i+2}) / sqrt(3d), indices mod d.
struct CyclicCubic {};

// f(x) = profile(x_1).
struct CustomRidge {
  Activation profile;
};

struct TargetFunction {
  std::variant<RidgeHermite, CyclicCubic, CustomRidge> kind;
  int d = 0;

  bool is_ridge() const { return !std::holds_alternative<CyclicCubic>(kind); }
  bool is_cyclic_invariant() const { return std::holds_alternative<CyclicCubic>(kind); }
  // Canonical descriptor; parse_target(id(), d) reproduces the target.
  std::string id() const;
};

TargetFunction ridge_hermite(int d, std::vector<double> a);
TargetFunction cyclic_cubic(int d);
TargetFunction custom_ridge(int d, Activation profile);

// Accepts "hermite:a0,a1,...", "cyclic_cubic", "ridge:<activation>", "zero",
// and the presets "quadratic" (a = 1/2, 1/sqrt2, 1/sqrt8) and "cubic"
// (a = 1/2, 1/sqrt2, 0, 1/sqrt24).
TargetFunction parse_target(std::string_view descriptor, int d);

// Deterministic per-(seed, stream) generator so trials are order-independent.
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream);

// n i.i.d. points, Gaussian vectors rescaled to norm sqrt(d).
Eigen::MatrixXd sample_sphere(int n, int d, std::mt19937_64& rng);
Eigen::MatrixXd sample_sphere(int n, int d, std::uint64_t seed);

Eigen::VectorXd eval_target(const TargetFunction& f, const Eigen::MatrixXd& X);

// ||P_k f||^2 for k = 0..k_max. Ridge polynomials of degree p return p+1
// entries, custom ridges K+1, the cyclic cubic 4.
std::vector<double> degree_norms(const TargetFunction& f, int K = 30);

// Gegenbauer coefficients c_k of a ridge profile, so P_k f(x) = c_k B(d,k) Q_k(sqrt(d) x_1).
std::vector<double> ridge_profile_coefficients(const TargetFunction& f, int K = 30);

// ||f||^2, exact for polynomial targets.
double target_norm2(const TargetFunction& f, int K = 30);

// Degree norms of the cyclic symmetrization S f. Equal to degree_norms for
// invariant targets.
std::vector<double> invariant_degree_norms(const TargetFunction& f, int K = 30);

struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  double sigma_eps2 = 0.0;
  std::uint64_t seed = 0;
  TargetFunction target;

  int n() const { return static_cast<int>(X.rows()); }
  int d() const { return static_cast<int>(X.cols()); }
};

Dataset make_dataset(const TargetFunction& f, int n, double sigma_eps2, std::uint64_t seed);

// All d cyclic shifts of every row, shift-major (identity block first).
// Refuses when n*d exceeds max_rows.
Dataset augment_cyclic(const Dataset& ds, std::size_t max_rows = 2'000'000);

// Header "# d=.. n=.. sigma_eps2=.. seed=.. target=..", then one row "x_1 .. x_d y" per point.
void write_dataset(std::ostream& os, const Dataset& ds);
Dataset read_dataset(std::istream& is);

}  // namespace kdyn
