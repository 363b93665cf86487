#include "kdyn/spheredata.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "kdyn/errors.hpp"
#include "kdyn/specfun.hpp"

namespace kdyn {

namespace {

std::string fmt17(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

double to_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("bad number '" + std::string(s) + "'");
  }
  return v;
}

std::uint64_t to_u64(std::string_view s) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("bad integer '" + std::string(s) + "'");
  }
  return v;
}

Activation ridge_profile(const TargetFunction& f) {
  if (const auto* h = std::get_if<RidgeHermite>(&f.kind)) {
    const auto a = h->a;
    return {f.id(),
            [a](double x) {
              double s = 0.0;
              for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * hermite_he(static_cast<int>(j), x);
              return s;
            },
            {}};
  }
  if (const auto* c = std::get_if<CustomRidge>(&f.kind)) return c->profile;
  throw InputError("target '" + f.id() + "' is not a ridge function");
}

int ridge_degree_cap(const TargetFunction& f, int K) {
  if (const auto* h = std::get_if<RidgeHermite>(&f.kind)) return static_cast<int>(h->a.size()) - 1;
  return K;
}

}  // namespace

std::string TargetFunction::id() const {
  if (const auto* h = std::get_if<RidgeHermite>(&kind)) {
    std::string s = "hermite:";
    for (std::size_t j = 0; j < h->a.size(); ++j) {
      if (j) s += ',';
      s += fmt17(h->a[j]);
    }
    return s;
  }
  if (std::holds_alternative<CyclicCubic>(kind)) return "cyclic_cubic";
  return "ridge:" + std::get<CustomRidge>(kind).profile.id;
}

TargetFunction ridge_hermite(int d, std::vector<double> a) {
  if (a.empty()) throw InputError("ridge_hermite needs at least one coefficient");
  return {RidgeHermite{std::move(a)}, d};
}

TargetFunction cyclic_cubic(int d) {
  if (d < 3) throw InputError("cyclic cubic target needs d >= 3");
  return {CyclicCubic{}, d};
}

TargetFunction custom_ridge(int d, Activation profile) { return {CustomRidge{std::move(profile)}, d}; }

TargetFunction parse_target(std::string_view desc, int d) {
  if (desc == "cyclic_cubic") return cyclic_cubic(d);
  if (desc == "zero") return ridge_hermite(d, {0.0});
  if (desc == "quadratic") {
    return ridge_hermite(d, {0.5, 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(8.0)});
  }
  if (desc == "cubic") {
    return ridge_hermite(d, {0.5, 1.0 / std::sqrt(2.0), 0.0, 1.0 / std::sqrt(24.0)});
  }
  if (desc.rfind("hermite:", 0) == 0) {
    std::vector<double> a;
    std::string_view rest = desc.substr(8);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      a.push_back(to_double(rest.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    if (a.empty()) throw ConfigError("hermite target needs coefficients");
    return ridge_hermite(d, std::move(a));
  }
  if (desc.rfind("ridge:", 0) == 0) return custom_ridge(d, parse_activation(desc.substr(6)));
  throw ConfigError("unknown target '" + std::string(desc) + "'");
}

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

Eigen::MatrixXd sample_sphere(int n, int d, std::mt19937_64& rng) {
  if (n < 1) throw InputError("sample_sphere needs n >= 1");
  if (d < 3) throw InputError("sample_sphere needs d >= 3");
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd X(n, d);
  const double r = std::sqrt(static_cast<double>(d));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) X(i, j) = normal(rng);
    X.row(i) *= r / X.row(i).norm();
  }
  return X;
}

Eigen::MatrixXd sample_sphere(int n, int d, std::uint64_t seed) {
  auto rng = make_rng(seed, 0);
  return sample_sphere(n, d, rng);
}

Eigen::VectorXd eval_target(const TargetFunction& f, const Eigen::MatrixXd& X) {
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  if (d != f.d) throw InputError("target dimension does not match points");
  Eigen::VectorXd y(n);
  if (std::holds_alternative<CyclicCubic>(f.kind)) {
    const double scale = 1.0 / std::sqrt(3.0 * static_cast<double>(d));
    for (Eigen::Index i = 0; i < n; ++i) {
      double s1 = 0.0, s2 = 0.0, s3 = 0.0;
      for (Eigen::Index j = 0; j < d; ++j) {
        const double a = X(i, j);
        const double b = X(i, (j + 1) % d);
        const double c = X(i, (j + 2) % d);
        s1 += a;
        s2 += a * b;
        s3 += a * b * c;
      }
      y(i) = scale * (s1 + s2 + s3);
    }
    return y;
  }
  if (const auto* h = std::get_if<RidgeHermite>(&f.kind); h && h->a.empty()) {
    throw InputError("ridge_hermite with empty coefficients");
  }
  const Activation g = ridge_profile(f);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = g(X(i, 0));
  return y;
}

std::vector<double> ridge_profile_coefficients(const TargetFunction& f, int K) {
  const Activation g = ridge_profile(f);
  const int cap = ridge_degree_cap(f, K);
  const GegenbauerBasis basis(f.d, cap);
  const int order = std::max(200, cap + 20);
  return gegenbauer_coefficients(basis, g.fn, marginal_quadrature_for(f.d, g, order));
}

std::vector<double> degree_norms(const TargetFunction& f, int K) {
  const double d = f.d;
  if (std::holds_alternative<CyclicCubic>(f.kind)) {
    // Each sum is a harmonic polynomial of pure degree; sphere moments
    // E[x1^2 x2^2] = d/(d+2), E[x1^2 x2^2 x3^2] = d^2/((d+2)(d+4)).
    const double deg1 = 1.0 / 3.0;
    const double deg2 = d / (3.0 * (d + 2.0));
    // For d = 3 every cubic term is the same monomial x1 x2 x3.
    const double triple_mult = f.d == 3 ? 3.0 : 1.0;
    const double deg3 = triple_mult * d * d / (3.0 * (d + 2.0) * (d + 4.0));
    return {0.0, deg1, deg2, deg3};
  }
  const auto c = ridge_profile_coefficients(f, K);
  std::vector<double> out(c.size());
  for (std::size_t k = 0; k < c.size(); ++k) {
    out[k] = c[k] * c[k] * dim_spherical_harmonics_real(f.d, static_cast<int>(k));
  }
  return out;
}

double target_norm2(const TargetFunction& f, int K) {
  if (const auto* c = std::get_if<CustomRidge>(&f.kind)) {
    const auto quad = marginal_quadrature_for(f.d, c->profile);
    return quad.integrate([&](double x) {
      const double v = c->profile(x);
      return v * v;
    });
  }
  double s = 0.0;
  for (double v : degree_norms(f, K)) s += v;
  return s;
}

std::vector<double> invariant_degree_norms(const TargetFunction& f, int K) {
  auto norms = degree_norms(f, K);
  if (f.is_cyclic_invariant()) return norms;
  // P_k S f = (1/d) sum_i c_k B_k Q_k(sqrt(d) x_i); its squared norm is
  // c_k^2 B_k (1 + (d-1) Q_k(0)) / d.
  const GegenbauerBasis basis(f.d, static_cast<int>(norms.size()) - 1);
  const double d = f.d;
  for (std::size_t k = 0; k < norms.size(); ++k) {
    norms[k] *= (1.0 + (d - 1.0) * basis.eval(static_cast<int>(k), 0.0)) / d;
  }
  return norms;
}

Dataset make_dataset(const TargetFunction& f, int n, double sigma_eps2, std::uint64_t seed) {
  if (sigma_eps2 < 0.0) throw InputError("noise variance must be nonnegative");
  Dataset ds;
  auto rng = make_rng(seed, 0);
  ds.X = sample_sphere(n, f.d, rng);
  ds.y = eval_target(f, ds.X);
  if (sigma_eps2 > 0.0) {
    auto noise_rng = make_rng(seed, 1);
    std::normal_distribution<double> normal(0.0, std::sqrt(sigma_eps2));
    for (Eigen::Index i = 0; i < ds.y.size(); ++i) ds.y(i) += normal(noise_rng);
  }
  ds.sigma_eps2 = sigma_eps2;
  ds.seed = seed;
  ds.target = f;
  return ds;
}

Dataset augment_cyclic(const Dataset& ds, std::size_t max_rows) {
  const auto n = static_cast<std::size_t>(ds.n());
  const auto d = static_cast<std::size_t>(ds.d());
  if (n * d > max_rows) {
    throw InputError("augmented dataset needs " + std::to_string(n * d) + " rows (" +
                     std::to_string(n * d * d * sizeof(double)) + " bytes), cap is " +
                     std::to_string(max_rows) + " rows");
  }
  Dataset out;
  out.X.resize(static_cast<Eigen::Index>(n * d), static_cast<Eigen::Index>(d));
  out.y.resize(static_cast<Eigen::Index>(n * d));
  for (std::size_t g = 0; g < d; ++g) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = static_cast<Eigen::Index>(g * n + i);
      for (std::size_t j = 0; j < d; ++j) {
        out.X(row, static_cast<Eigen::Index>(j)) =
            ds.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>((j + g) % d));
      }
      out.y(row) = ds.y(static_cast<Eigen::Index>(i));
    }
  }
  out.sigma_eps2 = ds.sigma_eps2;
  out.seed = ds.seed;
  out.target = ds.target;
  return out;
}

void write_dataset(std::ostream& os, const Dataset& ds) {
  const auto old = os.precision(17);
  os << "# d=" << ds.d() << " n=" << ds.n() << " sigma_eps2=" << ds.sigma_eps2
     << " seed=" << ds.seed << " target=" << ds.target.id() << "\n";
  for (int i = 0; i < ds.n(); ++i) {
    for (int j = 0; j < ds.d(); ++j) os << ds.X(i, j) << ' ';
    os << ds.y(i) << '\n';
  }
  os.precision(old);
}

Dataset read_dataset(std::istream& is) {
  std::string header;
  if (!std::getline(is, header) || header.rfind("# ", 0) != 0) {
    throw InputError("dataset file lacks a '# key=value' header");
  }
  std::map<std::string, std::string> kv;
  std::istringstream hs(header.substr(2));
  std::string tok;
  while (hs >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw InputError("malformed header token '" + tok + "'");
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  for (const char* key : {"d", "n", "sigma_eps2", "seed", "target"}) {
    if (!kv.count(key)) throw InputError(std::string("dataset header missing '") + key + "'");
  }
  Dataset ds;
  const int d = static_cast<int>(to_u64(kv["d"]));
  const int n = static_cast<int>(to_u64(kv["n"]));
  ds.sigma_eps2 = to_double(kv["sigma_eps2"]);
  ds.seed = to_u64(kv["seed"]);
  ds.target = parse_target(kv["target"], d);
  ds.X.resize(n, d);
  ds.y.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      if (!(is >> ds.X(i, j))) throw InputError("dataset truncated at row " + std::to_string(i));
    }
    if (!(is >> ds.y(i))) throw InputError("dataset truncated at row " + std::to_string(i));
  }
  return ds;
}

}  // namespace kdyn
