#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "kdyn/activation.hpp"
#include "kdyn/specfun.hpp"

namespace kdyn {

// Spectrum of the dot-product kernel h(<x1,x2>/d) = E_w[sigma(<w,x1>) sigma(<w,x2>)],
// w ~ Unif(S^{d-1}), truncated at degree K.
//
// xi[k] is the operator eigenvalue on V_{d,k} (multiplicity B(d,k)), so
// h(s) = sum_k xi[k] B(d,k) Q_k(d s).
struct KernelSpectrum {
  int d = 0;
  int K = 0;
  std::vector<double> xi;
  std::vector<double> multiplicity;  // B(d,k) in floating point
  std::vector<double> series;        // xi[k] * B(d,k)
  double diagonal_exact = 0.0;       // h(1) = E[sigma(<w,x>)^2]
  std::string activation_id;
  std::shared_ptr<const GegenbauerBasis> basis;

  double truncated_trace() const;
  // diagonal_exact - truncated_trace(): bound on |h(s) - h_K(s)| at s = 1.
  double truncation_gap() const { return diagonal_exact - truncated_trace(); }
};

KernelSpectrum build_dot_kernel(const Activation& sigma, int d, int K = 30, int quad_order = 200);

// Spectrum assembled from given eigenvalues (e.g. the squared-kernel operator).
KernelSpectrum spectrum_from_eigenvalues(int d, std::vector<double> xi, double diagonal_exact,
                                         std::string id);

// Truncated series h_K(s).
double kernel_value(const KernelSpectrum& spec, double s);

// Symmetric n x n matrix with off-diagonal h_K(<xi,xj>/d) and diagonal h(1).
// Throws InputError naming the first row whose norm differs from sqrt(d) by
// more than 1e-8.
Eigen::MatrixXd kernel_matrix(const KernelSpectrum& spec, const Eigen::MatrixXd& X);

// Rectangular A x B matrix h_K(<a,b>/d); no diagonal substitution.
Eigen::MatrixXd kernel_cross(const KernelSpectrum& spec, const Eigen::MatrixXd& A,
                             const Eigen::MatrixXd& B);

struct TailTraces {
  int level_degree = 0;
  double kappa_H = 0.0;
  double kappa_M = 0.0;
};

TailTraces tail_traces(const KernelSpectrum& spec, int m_star_degree);

// Average of a dot-product kernel over the d cyclic coordinate shifts.
struct CyclicKernel {
  KernelSpectrum base;
  int group_size = 0;
};

CyclicKernel make_cyclic(KernelSpectrum base);

// (g_i x)_j = x_{(j + i) mod d}.
Eigen::VectorXd cyclic_shift(const Eigen::VectorXd& x, int shift);
Eigen::MatrixXd cyclic_shift_rows(const Eigen::MatrixXd& X, int shift);

double cyclic_kernel_value(const CyclicKernel& ck, const Eigen::VectorXd& x1,
                           const Eigen::VectorXd& x2);
// The identity-shift term on the diagonal uses h(1), matching kernel_matrix.
Eigen::MatrixXd cyclic_kernel_matrix(const CyclicKernel& ck, const Eigen::MatrixXd& X);
Eigen::MatrixXd cyclic_kernel_cross(const CyclicKernel& ck, const Eigen::MatrixXd& A,
                                    const Eigen::MatrixXd& B);

using AnyKernel = std::variant<KernelSpectrum, CyclicKernel>;

const KernelSpectrum& base_spectrum(const AnyKernel& k);
bool is_cyclic(const AnyKernel& k);
std::string kernel_id(const AnyKernel& k);
Eigen::MatrixXd gram(const AnyKernel& k, const Eigen::MatrixXd& X);
Eigen::MatrixXd cross(const AnyKernel& k, const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

// Whitespace-separated table: k, B(d,k), xi_k, cumulative trace.
void write_spectrum_table(std::ostream& os, const KernelSpectrum& spec);

// Throws InputError if a row of X is off S^{d-1}(sqrt d) by more than tol.
void check_on_sphere(const Eigen::MatrixXd& X, int d, double tol = 1e-8);

}  // namespace kdyn
