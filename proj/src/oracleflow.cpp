#include "kdyn/oracleflow.hpp"

#include <cmath>
#include <sstream>

#include "kdyn/errors.hpp"

namespace kdyn {

double oracle_risk(std::span<const double> xi, std::span<const double> norms, double sigma_eps2,
                   double t) {
  if (!(t >= 0.0)) throw InputError("oracle risk needs t >= 0");
  double r = sigma_eps2;
  for (std::size_t k = 0; k < norms.size(); ++k) {
    if (norms[k] == 0.0) continue;
    r += k < xi.size() ? std::exp(-2.0 * t * xi[k]) * norms[k] : norms[k];
  }
  return r;
}

double oracle_risk(const KernelSpectrum& spec, std::span<const double> norms, double sigma_eps2,
                   double t) {
  return oracle_risk(spec.xi, norms, sigma_eps2, t);
}

double oracle_l2_distance(const KernelSpectrum& spec, std::span<const double> norms, int j,
                          double t) {
  if (!(t >= 0.0)) throw InputError("oracle distance needs t >= 0");
  if (j < 0) throw InputError("oracle distance needs j >= 0");
  double r = 0.0;
  for (std::size_t k = 0; k < norms.size(); ++k) {
    const double xi = k < spec.xi.size() ? spec.xi[k] : 0.0;
    if (static_cast<int>(k) <= j) {
      r += std::exp(-2.0 * t * xi) * norms[k];
    } else {
      const double learned = -std::expm1(-t * xi);
      r += learned * learned * norms[k];
    }
  }
  return r;
}

OracleCurve oracle_curve(const KernelSpectrum& spec, std::span<const double> norms,
                         double sigma_eps2, std::span<const double> times,
                         std::optional<int> level) {
  OracleCurve c;
  c.times.assign(times.begin(), times.end());
  c.risk.reserve(times.size());
  if (level) c.l2_to_projection.emplace();
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (i > 0 && !(times[i] > times[i - 1])) throw InputError("time grid must be strictly increasing");
    c.risk.push_back(oracle_risk(spec, norms, sigma_eps2, times[i]));
    if (i > 0 && c.risk[i] > c.risk[i - 1] + 1e-12) {
      std::ostringstream os;
      os.precision(17);
      os << "oracle risk increased from " << c.risk[i - 1] << " to " << c.risk[i] << " at t=" << times[i];
      throw NumericalError(os.str());
    }
    if (level) c.l2_to_projection->push_back(oracle_l2_distance(spec, norms, *level, times[i]));
  }
  return c;
}

}  // namespace kdyn
