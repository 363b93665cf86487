#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "kdyn/activation.hpp"

namespace kdyn {

// Dimension B(d, k) of the degree-k spherical harmonics on S^{d-1}, computed
// with exact 128-bit integer arithmetic. Throws OverflowError when the result
// (or an intermediate) does not fit.
std::uint64_t dim_spherical_harmonics(int d, int k);

// Same quantity in floating point; used where B(d, k) legitimately exceeds
// 64 bits (e.g. k = 30 at d = 400).
double dim_spherical_harmonics_real(int d, int k);

// Gegenbauer polynomials Q_k^{(d)} on [-d, d], normalized so Q_k(d) = 1 and
// orthogonal under the law of sqrt(d) <x, e_1>, x ~ Unif(S^{d-1}(sqrt d)).
//
// Three-term recurrence: Q_{k+1}(t) = (a_k t + b_k) Q_k(t) - c_k Q_{k-1}(t).
class GegenbauerBasis {
 public:
  struct Recurrence {
    double a;
    double b;
    double c;
  };

  GegenbauerBasis(int d, int max_degree);

  int dim() const { return d_; }
  int max_degree() const { return max_degree_; }
  std::span<const Recurrence> recurrence() const { return rec_; }

  // Q_k(t). Throws InputError when k > K or |t| > d.
  double eval(int k, double t) const;
  // Q_0(t)..Q_K(t) into out (resized to K+1).
  void eval_all(double t, std::vector<double>& out) const;
  // sum_k coeffs[k] Q_k(t) for k < coeffs.size() <= K+1. No range check on t.
  double series(std::span<const double> coeffs, double t) const;

 private:
  int d_;
  int max_degree_;
  std::vector<Recurrence> rec_;
};

// Quadrature rule for tau^1_d, the law of <e_1, x> with x ~ Unif(S^{d-1}(sqrt d)),
// whose density is proportional to (1 - x^2/d)^{(d-3)/2} on [-sqrt d, sqrt d].
struct MarginalQuadrature {
  int d = 0;
  std::vector<double> nodes;
  std::vector<double> weights;
  // Polynomials of degree <= exactness_degree integrate exactly. Composite
  // (kink-aware) rules are not polynomial-exact and report -1.
  int exactness_degree = -1;

  template <class F>
  double integrate(F&& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
    return s;
  }
};

// Gauss rule (Golub-Welsch on the Gegenbauer Jacobi matrix), exact to degree
// 2*num_nodes - 1.
MarginalQuadrature marginal_quadrature(int d, int num_nodes);

// Composite Gauss-Legendre rule in the angle x = sqrt(d) sin(theta), split at
// the given kinks. Accurate to near machine precision for piecewise-analytic
// integrands.
MarginalQuadrature marginal_quadrature_piecewise(int d, std::span<const double> kinks,
                                                 int order_per_panel = 20);

// Picks the Gauss rule for smooth activations and the composite rule otherwise.
MarginalQuadrature marginal_quadrature_for(int d, const Activation& sigma, int num_nodes = 200);

// xi_{d,k}(sigma) = int sigma(x) Q_k(sqrt(d) x) tau^1_d(dx), k = 0..K.
std::vector<double> gegenbauer_coefficients(const GegenbauerBasis& basis,
                                            const std::function<double(double)>& sigma,
                                            const MarginalQuadrature& quad);

// Hermite expansion g = sum_k mu_k He_k / k!.
struct HermiteSeries {
  std::vector<double> mu;

  double operator()(double x) const;
  int max_degree() const { return static_cast<int>(mu.size()) - 1; }
};

// mu_k = E[sigma(G) He_k(G)], G ~ N(0,1). Gauss-Hermite for smooth sigma,
// composite Gauss-Legendre split at kinks otherwise.
HermiteSeries hermite_coefficients(const Activation& sigma, int max_degree);

// Probabilists' Gauss-Hermite rule (weights sum to 1).
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
GaussRule gauss_hermite(int num_nodes);
GaussRule gauss_legendre(int num_nodes);

// xi_{d,k}(sigma) * (B(d,k) k!)^{1/2} for each d; tends to mu_k(sigma).
std::vector<double> check_mu_xi_limit(const Activation& sigma, int k, std::span<const int> dims);

}  // namespace kdyn
