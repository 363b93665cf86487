#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>

namespace kdyn::testing {

// E[g(<e_1, x>)] for x uniform on S^{d-1}(sqrt d), by the trapezoid rule in
// the angle x = sqrt(d) sin(theta) against cos^{d-2}(theta). The integrand is
// smooth and vanishes to high order at the endpoints, so the rule converges
// geometrically.
inline double sphere_marginal_mean(int d, const std::function<double(double)>& g, int points = 4000) {
  const double h = std::numbers::pi / points;
  const double r = std::sqrt(static_cast<double>(d));
  double num = 0.0, den = 0.0;
  for (int i = 1; i < points; ++i) {
    const double th = -std::numbers::pi / 2 + i * h;
    const double w = std::pow(std::cos(th), d - 2);
    num += w * g(r * std::sin(th));
    den += w;
  }
  return num / den;
}

// E[x_1^{2m}] on S^{d-1}(sqrt d): d^m (2m-1)!! / (d (d+2) ... (d+2m-2)).
inline double sphere_even_moment(int d, int m) {
  double v = 1.0;
  for (int i = 0; i < m; ++i) v *= static_cast<double>(d) * (2 * i + 1) / (d + 2.0 * i);
  return v;
}

inline double relu_arccos(double s) {
  return (std::sqrt(1.0 - s * s) + (std::numbers::pi - std::acos(s)) * s) / (2.0 * std::numbers::pi);
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe mean_se(const Eigen::VectorXd& v) {
  MeanSe r;
  const double n = static_cast<double>(v.size());
  r.mean = v.mean();
  r.se = std::sqrt((v.array() - r.mean).square().sum() / (n - 1.0) / n);
  return r;
}

}  // namespace kdyn::testing
