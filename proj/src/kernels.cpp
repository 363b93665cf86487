#include "kdyn/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "kdyn/errors.hpp"
#include "kdyn/parallel.hpp"

namespace kdyn {

namespace {

inline double clamp_unit(double s) { return std::clamp(s, -1.0, 1.0); }

// Applies h_K to every entry of the inner-product matrix G = A B^T (not yet divided by d).
void apply_series_inplace(const KernelSpectrum& spec, Eigen::MatrixXd& G, double scale,
                          bool accumulate, Eigen::MatrixXd* out) {
  const double inv_d = 1.0 / spec.d;
  const double dd = spec.d;
  const auto cols = static_cast<std::size_t>(G.cols());
  parallel_for(cols, [&](std::size_t b, std::size_t e) {
    for (std::size_t j = b; j < e; ++j) {
      for (Eigen::Index i = 0; i < G.rows(); ++i) {
        const double s = clamp_unit(G(i, static_cast<Eigen::Index>(j)) * inv_d);
        const double v = scale * spec.basis->series(spec.series, dd * s);
        if (accumulate) {
          (*out)(i, static_cast<Eigen::Index>(j)) += v;
        } else {
          G(i, static_cast<Eigen::Index>(j)) = v;
        }
      }
    }
  });
}

}  // namespace

double KernelSpectrum::truncated_trace() const {
  double s = 0.0;
  for (double v : series) s += v;
  return s;
}

void check_on_sphere(const Eigen::MatrixXd& X, int d, double tol) {
  if (X.cols() != d) {
    throw InputError("point set has " + std::to_string(X.cols()) + " columns, expected d=" +
                     std::to_string(d));
  }
  const double r = std::sqrt(static_cast<double>(d));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double nrm = X.row(i).norm();
    if (!(std::abs(nrm - r) <= tol)) {
      std::ostringstream os;
      os.precision(17);
      os << "row " << i << " has norm " << nrm << ", expected sqrt(d)=" << r;
      throw InputError(os.str());
    }
  }
}

KernelSpectrum spectrum_from_eigenvalues(int d, std::vector<double> xi, double diagonal_exact,
                                         std::string id) {
  if (xi.empty()) throw InputError("empty spectrum");
  KernelSpectrum spec;
  spec.d = d;
  spec.K = static_cast<int>(xi.size()) - 1;
  spec.basis = std::make_shared<const GegenbauerBasis>(d, spec.K);
  spec.xi = std::move(xi);
  spec.multiplicity.resize(spec.xi.size());
  spec.series.resize(spec.xi.size());
  for (int k = 0; k <= spec.K; ++k) {
    spec.multiplicity[k] = dim_spherical_harmonics_real(d, k);
    spec.series[k] = spec.xi[k] * spec.multiplicity[k];
  }
  spec.diagonal_exact = diagonal_exact;
  spec.activation_id = std::move(id);
  return spec;
}

KernelSpectrum build_dot_kernel(const Activation& sigma, int d, int K, int quad_order) {
  const GegenbauerBasis basis(d, K);
  const MarginalQuadrature quad = marginal_quadrature_for(d, sigma, quad_order);
  const std::vector<double> coef = gegenbauer_coefficients(basis, sigma.fn, quad);
  std::vector<double> xi(coef.size());
  for (std::size_t k = 0; k < coef.size(); ++k) xi[k] = coef[k] * coef[k];
  const double diag = quad.integrate([&](double x) {
    const double v = sigma(x);
    return v * v;
  });
  if (!(diag >= 0.0)) throw NumericalError("negative kernel diagonal from quadrature");
  KernelSpectrum spec = spectrum_from_eigenvalues(d, std::move(xi), diag, sigma.id);
  const double trace = spec.truncated_trace();
  if (trace > diag + 1e-9 * std::max(1.0, diag)) {
    std::ostringstream os;
    os.precision(17);
    os << "truncated trace " << trace << " exceeds kernel diagonal " << diag;
    throw NumericalError(os.str());
  }
  return spec;
}

double kernel_value(const KernelSpectrum& spec, double s) {
  return spec.basis->series(spec.series, spec.d * clamp_unit(s));
}

Eigen::MatrixXd kernel_cross(const KernelSpectrum& spec, const Eigen::MatrixXd& A,
                             const Eigen::MatrixXd& B) {
  check_on_sphere(A, spec.d);
  check_on_sphere(B, spec.d);
  Eigen::MatrixXd G = A * B.transpose();
  apply_series_inplace(spec, G, 1.0, false, nullptr);
  return G;
}

Eigen::MatrixXd kernel_matrix(const KernelSpectrum& spec, const Eigen::MatrixXd& X) {
  check_on_sphere(X, spec.d);
  Eigen::MatrixXd G = X * X.transpose();
  G = G.selfadjointView<Eigen::Lower>();  // exact symmetry before mapping
  apply_series_inplace(spec, G, 1.0, false, nullptr);
  G.diagonal().setConstant(spec.diagonal_exact);
  return G;
}

TailTraces tail_traces(const KernelSpectrum& spec, int m_star_degree) {
  if (m_star_degree < 0 || m_star_degree > spec.K) {
    throw InputError("level degree " + std::to_string(m_star_degree) + " outside [0, K]");
  }
  TailTraces t;
  t.level_degree = m_star_degree;
  double head = 0.0;
  for (int k = 0; k <= m_star_degree; ++k) head += spec.series[k];
  t.kappa_H = std::max(0.0, spec.diagonal_exact - head);
  for (int k = m_star_degree + 1; k <= spec.K; ++k) t.kappa_M += spec.xi[k] * spec.series[k];
  return t;
}

CyclicKernel make_cyclic(KernelSpectrum base) {
  CyclicKernel ck;
  ck.group_size = base.d;
  ck.base = std::move(base);
  return ck;
}

Eigen::VectorXd cyclic_shift(const Eigen::VectorXd& x, int shift) {
  const Eigen::Index d = x.size();
  Eigen::VectorXd y(d);
  for (Eigen::Index j = 0; j < d; ++j) y(j) = x((j + shift) % d);
  return y;
}

Eigen::MatrixXd cyclic_shift_rows(const Eigen::MatrixXd& X, int shift) {
  const Eigen::Index d = X.cols();
  Eigen::MatrixXd Y(X.rows(), d);
  for (Eigen::Index j = 0; j < d; ++j) Y.col(j) = X.col((j + shift) % d);
  return Y;
}

double cyclic_kernel_value(const CyclicKernel& ck, const Eigen::VectorXd& x1,
                           const Eigen::VectorXd& x2) {
  const int d = ck.group_size;
  check_on_sphere(x1.transpose(), d);
  check_on_sphere(x2.transpose(), d);
  double s = 0.0;
  for (int g = 0; g < d; ++g) {
    double ip = 0.0;
    for (int j = 0; j < d; ++j) ip += x1(j) * x2((j + g) % d);
    s += kernel_value(ck.base, ip / d);
  }
  return s / d;
}

Eigen::MatrixXd cyclic_kernel_cross(const CyclicKernel& ck, const Eigen::MatrixXd& A,
                                    const Eigen::MatrixXd& B) {
  const int d = ck.group_size;
  check_on_sphere(A, d);
  check_on_sphere(B, d);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(A.rows(), B.rows());
  for (int g = 0; g < d; ++g) {
    Eigen::MatrixXd G = A * cyclic_shift_rows(B, g).transpose();
    apply_series_inplace(ck.base, G, 1.0 / d, true, &out);
  }
  return out;
}

Eigen::MatrixXd cyclic_kernel_matrix(const CyclicKernel& ck, const Eigen::MatrixXd& X) {
  Eigen::MatrixXd H = cyclic_kernel_cross(ck, X, X);
  const int d = ck.group_size;
  // Replace the identity-shift diagonal term h_K(<x,x>/d) by h(1).
  for (Eigen::Index i = 0; i < H.rows(); ++i) {
    const double s = X.row(i).squaredNorm() / d;
    H(i, i) += (ck.base.diagonal_exact - kernel_value(ck.base, s)) / d;
  }
  // Symmetrize: H_ij and H_ji sum the same shifts in opposite order.
  Eigen::MatrixXd S = 0.5 * (H + H.transpose());
  return S;
}

const KernelSpectrum& base_spectrum(const AnyKernel& k) {
  return std::visit(
      [](const auto& v) -> const KernelSpectrum& {
        if constexpr (std::is_same_v<std::decay_t<decltype(v)>, KernelSpectrum>) {
          return v;
        } else {
          return v.base;
        }
      },
      k);
}

bool is_cyclic(const AnyKernel& k) { return std::holds_alternative<CyclicKernel>(k); }

std::string kernel_id(const AnyKernel& k) {
  return (is_cyclic(k) ? "cyclic:" : "dot:") + base_spectrum(k).activation_id;
}

Eigen::MatrixXd gram(const AnyKernel& k, const Eigen::MatrixXd& X) {
  if (const auto* c = std::get_if<CyclicKernel>(&k)) return cyclic_kernel_matrix(*c, X);
  return kernel_matrix(std::get<KernelSpectrum>(k), X);
}

Eigen::MatrixXd cross(const AnyKernel& k, const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  if (const auto* c = std::get_if<CyclicKernel>(&k)) return cyclic_kernel_cross(*c, A, B);
  return kernel_cross(std::get<KernelSpectrum>(k), A, B);
}

void write_spectrum_table(std::ostream& os, const KernelSpectrum& spec) {
  os << "# d=" << spec.d << " K=" << spec.K << " activation=" << spec.activation_id
     << " diagonal_exact=" << spec.diagonal_exact << "\n";
  os << "k B(d,k) xi_k cumulative_trace\n";
  double cum = 0.0;
  const auto old = os.precision(17);
  for (int k = 0; k <= spec.K; ++k) {
    cum += spec.series[k];
    os << k << ' ' << spec.multiplicity[k] << ' ' << spec.xi[k] << ' ' << cum << '\n';
  }
  os.precision(old);
}

}  // namespace kdyn
