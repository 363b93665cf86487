#include "kdyn/specfun.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

#include "kdyn/errors.hpp"

namespace kdyn {

namespace {

using u128 = unsigned __int128;

void require_dim(int d) {
  if (d < 3) throw InputError("unsupported dimension d=" + std::to_string(d) + " (need d >= 3)");
}

u128 checked_mul(u128 a, u128 b, int d, int k) {
  u128 r = 0;
  if (__builtin_mul_overflow(a, b, &r)) {
    throw OverflowError("B(" + std::to_string(d) + "," + std::to_string(k) +
                        ") overflows 128-bit intermediate arithmetic");
  }
  return r;
}

// Golub-Welsch for a symmetric Jacobi matrix with zero diagonal.
GaussRule golub_welsch(const Eigen::VectorXd& offdiag, int n, double mass) {
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, offdiag, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) throw NumericalError("Golub-Welsch eigensolver failed");
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    rule.weights[i] = mass * v0 * v0;
  }
  // Enforce the exact reflection symmetry of even weights.
  for (int i = 0; i < n / 2; ++i) {
    const int j = n - 1 - i;
    const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.nodes[i] = -x;
    rule.nodes[j] = x;
    rule.weights[i] = rule.weights[j] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

}  // namespace

std::uint64_t dim_spherical_harmonics(int d, int k) {
  require_dim(d);
  if (k < 0) throw InputError("negative degree");
  if (k == 0) return 1;
  // C(k + d - 3, k) built incrementally; every partial product is an exact binomial.
  u128 binom = 1;
  for (int i = 1; i <= k; ++i) {
    binom = checked_mul(binom, static_cast<u128>(d - 3 + i), d, k) / static_cast<u128>(i);
  }
  const u128 num = checked_mul(binom, static_cast<u128>(2 * k + d - 2), d, k);
  const u128 b = num / static_cast<u128>(d - 2);
  if (b > std::numeric_limits<std::uint64_t>::max()) {
    throw OverflowError("B(" + std::to_string(d) + "," + std::to_string(k) + ") exceeds 64 bits");
  }
  return static_cast<std::uint64_t>(b);
}

double dim_spherical_harmonics_real(int d, int k) {
  require_dim(d);
  if (k < 0) throw InputError("negative degree");
  if (k == 0) return 1.0;
  double b = static_cast<double>(2 * k + d - 2) / static_cast<double>(d - 2);
  for (int i = 1; i <= k; ++i) b *= static_cast<double>(d - 3 + i) / static_cast<double>(i);
  return b;
}

GegenbauerBasis::GegenbauerBasis(int d, int max_degree) : d_(d), max_degree_(max_degree) {
  require_dim(d);
  if (max_degree < 0) throw InputError("max_degree must be >= 0");
  rec_.resize(static_cast<std::size_t>(max_degree) + 1);
  const double dd = d;
  for (int k = 0; k <= max_degree; ++k) {
    const double denom = k + dd - 2.0;
    rec_[k] = {(2.0 * k + dd - 2.0) / (dd * denom), 0.0, k / denom};
  }
}

double GegenbauerBasis::eval(int k, double t) const {
  if (k < 0 || k > max_degree_) {
    throw InputError("Gegenbauer degree " + std::to_string(k) + " out of range [0," +
                     std::to_string(max_degree_) + "]");
  }
  if (std::abs(t) > d_ * (1.0 + 1e-12)) {
    throw InputError("Gegenbauer argument outside [-d, d]");
  }
  if (k == 0) return 1.0;
  double prev = 1.0;
  double cur = rec_[0].a * t;
  for (int j = 1; j < k; ++j) {
    const double next = (rec_[j].a * t + rec_[j].b) * cur - rec_[j].c * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

void GegenbauerBasis::eval_all(double t, std::vector<double>& out) const {
  out.resize(static_cast<std::size_t>(max_degree_) + 1);
  out[0] = 1.0;
  if (max_degree_ >= 1) out[1] = rec_[0].a * t;
  for (int j = 1; j < max_degree_; ++j) {
    out[j + 1] = (rec_[j].a * t + rec_[j].b) * out[j] - rec_[j].c * out[j - 1];
  }
}

double GegenbauerBasis::series(std::span<const double> coeffs, double t) const {
  const std::size_t n = coeffs.size();
  if (n == 0) return 0.0;
  double prev = 1.0;
  double sum = coeffs[0];
  if (n == 1) return sum;
  double cur = rec_[0].a * t;
  sum += coeffs[1] * cur;
  for (std::size_t j = 1; j + 1 < n; ++j) {
    const double next = (rec_[j].a * t + rec_[j].b) * cur - rec_[j].c * prev;
    prev = cur;
    cur = next;
    sum += coeffs[j + 1] * cur;
  }
  return sum;
}

GaussRule gauss_legendre(int num_nodes) {
  if (num_nodes < 1) throw InputError("Gauss-Legendre needs >= 1 node");
  Eigen::VectorXd off(std::max(num_nodes - 1, 0));
  for (int k = 1; k < num_nodes; ++k) {
    const double kk = k;
    off(k - 1) = kk / std::sqrt(4.0 * kk * kk - 1.0);
  }
  return golub_welsch(off, num_nodes, 2.0);
}

GaussRule gauss_hermite(int num_nodes) {
  if (num_nodes < 1) throw InputError("Gauss-Hermite needs >= 1 node");
  Eigen::VectorXd off(std::max(num_nodes - 1, 0));
  for (int k = 1; k < num_nodes; ++k) off(k - 1) = std::sqrt(static_cast<double>(k));
  return golub_welsch(off, num_nodes, 1.0);
}

MarginalQuadrature marginal_quadrature(int d, int num_nodes) {
  require_dim(d);
  if (num_nodes < 2) throw InputError("marginal quadrature needs >= 2 nodes");
  // Monic Gegenbauer recurrence for weight (1-u^2)^{(d-3)/2}:
  // beta_k = k (k + d - 3) / ((2k + d - 2)(2k + d - 4)).
  Eigen::VectorXd off(num_nodes - 1);
  const double dd = d;
  for (int k = 1; k < num_nodes; ++k) {
    const double kk = k;
    const double beta = kk * (kk + dd - 3.0) / ((2.0 * kk + dd - 2.0) * (2.0 * kk + dd - 4.0));
    off(k - 1) = std::sqrt(beta);
  }
  GaussRule rule = golub_welsch(off, num_nodes, 1.0);
  MarginalQuadrature q;
  q.d = d;
  q.exactness_degree = 2 * num_nodes - 1;
  q.nodes.resize(num_nodes);
  q.weights = std::move(rule.weights);
  const double r = std::sqrt(dd);
  for (int i = 0; i < num_nodes; ++i) q.nodes[i] = r * rule.nodes[i];
  return q;
}

MarginalQuadrature marginal_quadrature_piecewise(int d, std::span<const double> kinks,
                                                 int order_per_panel) {
  require_dim(d);
  const double m = d - 2.0;  // density in theta is cos^{d-2}(theta)
  const double r = std::sqrt(static_cast<double>(d));
  // Beyond theta_max the weight underflows.
  const double theta_max = std::min(std::numbers::pi / 2.0, std::acos(std::exp(-745.0 / m)));
  std::vector<double> cuts{-theta_max, theta_max};
  for (double k : kinks) {
    if (std::abs(k) < r) {
      const double th = std::asin(k / r);
      if (th > -theta_max && th < theta_max) cuts.push_back(th);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  const double panel_width = std::min(0.05, 0.6 / std::sqrt(m + 1.0));
  const GaussRule gl = gauss_legendre(order_per_panel);

  MarginalQuadrature q;
  q.d = d;
  q.exactness_degree = -1;
  for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
    const double lo = cuts[p];
    const double hi = cuts[p + 1];
    const int panels = std::max(1, static_cast<int>(std::ceil((hi - lo) / panel_width)));
    const double h = (hi - lo) / panels;
    for (int j = 0; j < panels; ++j) {
      const double a = lo + j * h;
      for (int i = 0; i < order_per_panel; ++i) {
        const double th = a + 0.5 * h * (gl.nodes[i] + 1.0);
        const double c = std::cos(th);
        const double w = c > 0.0 ? 0.5 * h * gl.weights[i] * std::exp(m * std::log(c)) : 0.0;
        q.nodes.push_back(r * std::sin(th));
        q.weights.push_back(w);
      }
    }
  }
  double total = 0.0;
  for (double w : q.weights) total += w;
  for (double& w : q.weights) w /= total;
  return q;
}

MarginalQuadrature marginal_quadrature_for(int d, const Activation& sigma, int num_nodes) {
  if (sigma.smooth()) return marginal_quadrature(d, num_nodes);
  return marginal_quadrature_piecewise(d, sigma.kinks);
}

std::vector<double> gegenbauer_coefficients(const GegenbauerBasis& basis,
                                            const std::function<double(double)>& sigma,
                                            const MarginalQuadrature& quad) {
  const int K = basis.max_degree();
  if (quad.d != basis.dim()) throw InputError("quadrature and basis dimensions differ");
  constexpr int kSmoothnessMargin = 10;
  if (quad.exactness_degree >= 0 && quad.exactness_degree < 2 * K + kSmoothnessMargin) {
    throw InputError("quadrature exactness " + std::to_string(quad.exactness_degree) +
                     " insufficient for degree " + std::to_string(K));
  }
  const double r = std::sqrt(static_cast<double>(basis.dim()));
  std::vector<double> xi(static_cast<std::size_t>(K) + 1, 0.0);
  std::vector<double> q;
  for (std::size_t i = 0; i < quad.nodes.size(); ++i) {
    const double x = quad.nodes[i];
    const double v = sigma(x);
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os.precision(17);
      os << "activation is not finite at quadrature node x=" << x;
      throw NumericalError(os.str());
    }
    if (quad.weights[i] == 0.0) continue;
    basis.eval_all(r * x, q);
    const double wv = quad.weights[i] * v;
    for (int k = 0; k <= K; ++k) xi[k] += wv * q[k];
  }
  return xi;
}

double HermiteSeries::operator()(double x) const {
  std::vector<double> he;
  hermite_all(max_degree(), x, he);
  double s = 0.0;
  double fact = 1.0;
  for (int k = 0; k <= max_degree(); ++k) {
    if (k > 0) fact *= k;
    s += mu[k] * he[k] / fact;
  }
  return s;
}

HermiteSeries hermite_coefficients(const Activation& sigma, int max_degree) {
  if (max_degree < 0) throw InputError("max_degree must be >= 0");
  std::vector<double> nodes;
  std::vector<double> weights;
  if (sigma.smooth()) {
    GaussRule gh = gauss_hermite(std::max(200, 2 * max_degree + 2));
    nodes = std::move(gh.nodes);
    weights = std::move(gh.weights);
  } else {
    constexpr double kRange = 40.0;  // phi(40) ~ e^{-800}
    std::vector<double> cuts{-kRange, kRange};
    for (double k : sigma.kinks) {
      if (k > -kRange && k < kRange) cuts.push_back(k);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    const GaussRule gl = gauss_legendre(20);
    const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
      const int panels = std::max(1, static_cast<int>(std::ceil((cuts[p + 1] - cuts[p]) / 0.25)));
      const double h = (cuts[p + 1] - cuts[p]) / panels;
      for (int j = 0; j < panels; ++j) {
        for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
          const double x = cuts[p] + j * h + 0.5 * h * (gl.nodes[i] + 1.0);
          nodes.push_back(x);
          weights.push_back(0.5 * h * gl.weights[i] * inv_sqrt_2pi * std::exp(-0.5 * x * x));
        }
      }
    }
  }
  HermiteSeries out;
  out.mu.assign(static_cast<std::size_t>(max_degree) + 1, 0.0);
  double norm2 = 0.0;
  std::vector<double> he;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double v = sigma(nodes[i]);
    norm2 += weights[i] * v * v;
    if (!std::isfinite(norm2)) {
      throw NumericalError("activation is not square-integrable against the Gaussian measure");
    }
    hermite_all(max_degree, nodes[i], he);
    for (int k = 0; k <= max_degree; ++k) out.mu[k] += weights[i] * v * he[k];
  }
  for (double m : out.mu) {
    if (!std::isfinite(m)) throw NumericalError("divergent Hermite coefficient");
  }
  return out;
}

std::vector<double> check_mu_xi_limit(const Activation& sigma, int k, std::span<const int> dims) {
  if (k < 0) throw InputError("negative degree");
  double kfact = 1.0;
  for (int i = 2; i <= k; ++i) kfact *= i;
  std::vector<double> out;
  out.reserve(dims.size());
  for (int d : dims) {
    const GegenbauerBasis basis(d, std::max(k, 1));
    const auto quad = marginal_quadrature_for(d, sigma);
    const auto xi = gegenbauer_coefficients(basis, sigma.fn, quad);
    out.push_back(xi[k] * std::sqrt(dim_spherical_harmonics_real(d, k) * kfact));
  }
  return out;
}

}  // namespace kdyn
