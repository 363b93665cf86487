#include "kdyn/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <limits>
#include <sstream>

#include "kdyn/errors.hpp"
#include "kdyn/oracleflow.hpp"
#include "kdyn/output.hpp"

namespace kdyn {

namespace {

constexpr double nan_v = std::numeric_limits<double>::quiet_NaN();

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void check_monotone(const std::vector<double>& v, const std::vector<double>& times, const char* what) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[i - 1] + 1e-12) {
      std::ostringstream os;
      os.precision(17);
      os << what << " increased from " << v[i - 1] << " to " << v[i] << " at t=" << times[i];
      throw NumericalError(os.str());
    }
  }
}

std::string with_context(const std::string& msg, int trial, const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << msg << " [trial " << trial << ";";
  for (const auto& [k, v] : config_items(cfg)) os << ' ' << k << '=' << v;
  os << ']';
  return os.str();
}

// Re-throws e with the trial index and config echo attached, preserving its type.
[[noreturn]] void rethrow_with_context(int trial, const ExperimentConfig& cfg) {
  try {
    throw;
  } catch (const ConfigError& e) {
    throw ConfigError(with_context(e.what(), trial, cfg));
  } catch (const NumericalError& e) {
    throw NumericalError(with_context(e.what(), trial, cfg));
  } catch (const InputError& e) {
    throw InputError(with_context(e.what(), trial, cfg));
  }
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t trial, std::uint64_t purpose) {
  // splitmix64 finalizer over a combined key.
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ULL + trial * 0xBF58476D1CE4E5B9ULL + purpose * 0x94D049BB133111EBULL +
                    0x2545F4914F6CDD1DULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

AnyKernel make_kernel(const ExperimentConfig& cfg) {
  KernelSpectrum spec = build_dot_kernel(parse_activation(cfg.activation), cfg.d, cfg.K, cfg.quad_order);
  if (cfg.cyclic) return make_cyclic(std::move(spec));
  return spec;
}

FlowSetup make_flow_setup(const ExperimentConfig& cfg) {
  validate(cfg);
  FlowSetup s{make_kernel(cfg), parse_target(cfg.target, cfg.d), 0, 0, {}, 0.0, 0.0};
  s.n = cfg.sample_count();
  s.alpha = cfg.cyclic ? 1 : 0;
  const int K = base_spectrum(s.kernel).K;
  s.target_norm2 = target_norm2(s.target, K);
  s.learnable_norms = cfg.cyclic ? invariant_degree_norms(s.target, K) : degree_norms(s.target, K);
  double learnable = 0.0;
  for (double v : s.learnable_norms) learnable += v;
  s.unlearnable = std::max(0.0, s.target_norm2 - learnable);
  return s;
}

double setup_oracle_risk(const FlowSetup& s, double sigma_eps2, double t) {
  return oracle_risk(base_spectrum(s.kernel), s.learnable_norms, sigma_eps2 + s.unlearnable, t);
}

FlowTrial run_flow_trial(const FlowSetup& setup, const ExperimentConfig& cfg, int trial,
                         std::span<const double> times) {
  const Dataset ds = make_dataset(setup.target, setup.n, cfg.sigma_eps2, derive_seed(cfg.seed, trial, 0));
  const FlowSolution sol = solve_flow(gram(setup.kernel, ds.X), ds.y);
  FlowTrial out;
  out.train.reserve(times.size());
  for (double t : times) out.train.push_back(train_error(sol, t));
  if (cfg.test_method == "analytic") {
    const Eigen::VectorXd E = build_E_vector(setup.kernel, setup.target, ds.X);
    const Eigen::MatrixXd M = build_M_matrix(setup.kernel, ds.X);
    const AnalyticTestSet an = prepare_analytic(sol, E, M, setup.target_norm2, cfg.sigma_eps2);
    for (double t : times) {
      out.test.push_back(test_error_analytic(sol, an, t));
      out.test_se.push_back(0.0);
    }
    return out;
  }
  auto rng = make_rng(derive_seed(cfg.seed, trial, 1), 0);
  const Eigen::MatrixXd X_test = sample_sphere(cfg.test_set_size, cfg.d, rng);
  const McTestSet ts =
      prepare_test_set(sol, setup.kernel, ds.X, X_test, eval_target(setup.target, X_test), cfg.sigma_eps2);
  for (double t : times) {
    const McEstimate e = test_error_mc(sol, ts, t);
    out.test.push_back(e.mean);
    out.test_se.push_back(e.standard_error);
  }
  return out;
}

ErrorCurves run_flow_experiment(const ExperimentConfig& cfg) {
  const FlowSetup setup = make_flow_setup(cfg);
  ErrorCurves c;
  c.times = time_grid(cfg);
  const KernelSpectrum& spec = base_spectrum(setup.kernel);
  const OracleCurve oc = oracle_curve(spec, setup.learnable_norms, cfg.sigma_eps2 + setup.unlearnable, c.times);
  c.oracle = oc.risk;
  for (double t : c.times) {
    if (t > 1.0 && setup.n > 1) {
      c.plateau_pred.push_back(
          theoretical_plateaus(spec, setup.learnable_norms, cfg.sigma_eps2 + setup.unlearnable, t, setup.n,
                               setup.alpha)
              .predicted_test);
    } else {
      c.plateau_pred.push_back(nan_v);
    }
  }
  for (int trial = 0; trial < cfg.trials; ++trial) {
    try {
      FlowTrial tr = run_flow_trial(setup, cfg, trial, c.times);
      check_monotone(tr.train, c.times, "train error");
      c.train.push_back(std::move(tr.train));
      c.test.push_back(std::move(tr.test));
    } catch (const Error&) {
      rethrow_with_context(trial, cfg);
    }
  }
  c.metadata["n"] = std::to_string(setup.n);
  c.metadata["kernel"] = kernel_id(setup.kernel);
  c.metadata["target_id"] = setup.target.id();
  c.metadata["alpha"] = std::to_string(setup.alpha);
  c.metadata["target_norm2"] = num(setup.target_norm2);
  return c;
}

Metadata experiment_metadata(const std::string& command, const ExperimentConfig& cfg, const Metadata& extra,
                             bool with_timestamp) {
  Metadata m{{"command", command}};
  for (auto& kv : config_items(cfg)) m.push_back(std::move(kv));
  for (const auto& kv : extra) m.push_back(kv);
  m.emplace_back("test_error_includes_noise", "true");
  if (with_timestamp) m.emplace_back("timestamp", utc_timestamp());
  return m;
}

void write_flow_outputs(const ErrorCurves& curves, const ExperimentConfig& cfg, bool with_timestamp) {
  Metadata extra(curves.metadata.begin(), curves.metadata.end());
  const Metadata meta = experiment_metadata("flow", cfg, extra, with_timestamp);
  const auto train_mean = curves.train_mean();
  const auto test_mean = curves.test_mean();
  const std::vector<CsvColumn> cols{{"t", curves.times},           {"train_mean", train_mean},
                                    {"train_std", curves.train_std()}, {"test_mean", test_mean},
                                    {"test_std", curves.test_std()}, {"oracle", curves.oracle},
                                    {"plateau_pred", curves.plateau_pred}};
  write_file_atomic(cfg.output, [&](std::ostream& os) { write_csv(os, meta, cols); });
  const bool log_x = cfg.grid == "log";
  std::ostringstream title;
  title << (cfg.cyclic ? "cyclic " : "dot-product ") << cfg.activation << " kernel, d=" << cfg.d
        << ", n=" << cfg.sample_count() << ", " << cfg.target;
  write_file_atomic(replace_extension(cfg.output, ".svg"), [&](std::ostream& os) {
    write_svg_plot(os, title.str(), "t", "error",
                   {{"train", curves.times, train_mean, "#1f77b4", false},
                    {"test", curves.times, test_mean, "#d62728", false},
                    {"oracle", curves.times, curves.oracle, "#2ca02c", true},
                    {"plateau prediction", curves.times, curves.plateau_pred, "#7f7f7f", true}},
                   log_x);
  });
}

std::vector<long> iteration_grid(long steps, int points) {
  std::vector<long> g{0};
  for (int i = 0; i < points; ++i) {
    const double e = std::log(static_cast<double>(steps)) * i / std::max(1, points - 1);
    const long it = std::clamp<long>(std::lround(std::exp(e)), 1, steps);
    if (it > g.back()) g.push_back(it);
  }
  if (g.back() != steps) g.push_back(steps);
  return g;
}

RFCurves run_rf_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  const Activation sigma = parse_activation(cfg.activation);
  const TargetFunction f = parse_target(cfg.target, cfg.d);
  const int n = cfg.sample_count();
  const KernelSpectrum spec = build_dot_kernel(sigma, cfg.d, cfg.K, cfg.quad_order);
  std::vector<double> norms = cfg.cyclic ? invariant_degree_norms(f, cfg.K) : degree_norms(f, cfg.K);
  double learnable = 0.0;
  for (double v : norms) learnable += v;
  const double floor_extra = std::max(0.0, target_norm2(f, cfg.K) - learnable);

  SGDConfig sc;
  sc.learning_rate = cfg.learning_rate;
  sc.batch_size = cfg.batch_size;
  sc.momentum = cfg.momentum;
  sc.steps = cfg.steps;
  sc.eval_grid = iteration_grid(cfg.steps, cfg.eval_points);

  RFCurves c;
  c.iterations = sc.eval_grid;
  const bool want_emp = cfg.world != "oracle";
  const bool want_orc = cfg.world != "empirical";
  for (int trial = 0; trial < cfg.trials; ++trial) {
    try {
      const Dataset ds = make_dataset(f, n, cfg.sigma_eps2, derive_seed(cfg.seed, trial, 0));
      auto rng = make_rng(derive_seed(cfg.seed, trial, 1), 0);
      const Eigen::MatrixXd X_test = sample_sphere(cfg.test_set_size, cfg.d, rng);
      const Eigen::VectorXd f_test = eval_target(f, X_test);
      RFModel model = make_rf_model(cfg.num_features, cfg.d, sigma, cfg.cyclic, derive_seed(cfg.seed, trial, 2));
      const Eigen::MatrixXd Phi_test = features(model, X_test);
      Eigen::MatrixXd Phi_train;
      if (want_emp || cfg.learning_rate == 0.0) Phi_train = features(model, ds.X);
      SGDConfig run = sc;
      run.seed = derive_seed(cfg.seed, trial, 3);
      if (cfg.learning_rate == 0.0) {
        const Eigen::MatrixXd Hbar =
            Phi_train * Phi_train.transpose() / (static_cast<double>(cfg.num_features) * n);
        run.learning_rate = default_step_size(Hbar).learning_rate;
      }
      c.learning_rate = run.learning_rate;
      if (want_emp) {
        RFModel m = model;
        const SGDTrajectory tr = sgd_empirical(m, Phi_train, ds.y, Phi_test, f_test, cfg.sigma_eps2, run);
        c.train.push_back(tr.train);
        c.test.push_back(tr.test);
        c.t_eff = tr.t_eff;
      }
      if (want_orc) {
        RFModel m = model;
        const SGDTrajectory tr = sgd_oracle(m, f, cfg.sigma_eps2, Phi_test, f_test, run);
        c.oracle.push_back(tr.test);
        c.t_eff = tr.t_eff;
      }
    } catch (const Error&) {
      rethrow_with_context(trial, cfg);
    }
  }
  for (double t : c.t_eff) {
    c.plateau_pred.push_back(t > 1.0 && n > 1 ? theoretical_plateaus(spec, norms, cfg.sigma_eps2 + floor_extra, t, n,
                                                                     cfg.cyclic ? 1 : 0)
                                                    .predicted_test
                                              : nan_v);
  }
  c.metadata = {{"n", std::to_string(n)},
                {"kernel", (cfg.cyclic ? "cyclic:" : "dot:") + sigma.id},
                {"target_id", f.id()},
                {"effective_learning_rate", num(c.learning_rate)},
                {"t_eff", "heavy_ball_accumulated_step"}};
  return c;
}

void write_rf_outputs(const RFCurves& c, const ExperimentConfig& cfg, bool with_timestamp) {
  const Metadata meta = experiment_metadata("rf-sgd", cfg, c.metadata, with_timestamp);
  std::vector<double> iters(c.iterations.begin(), c.iterations.end());
  const auto train_mean = column_mean(c.train);
  const auto test_mean = column_mean(c.test);
  const auto oracle_mean = column_mean(c.oracle);
  const std::vector<CsvColumn> cols{{"iteration", iters},
                                    {"t_eff", c.t_eff},
                                    {"train_mean", train_mean},
                                    {"train_std", column_std(c.train)},
                                    {"test_mean", test_mean},
                                    {"test_std", column_std(c.test)},
                                    {"oracle", oracle_mean},
                                    {"oracle_std", column_std(c.oracle)},
                                    {"plateau_pred", c.plateau_pred}};
  write_file_atomic(cfg.output, [&](std::ostream& os) { write_csv(os, meta, cols); });
  std::ostringstream title;
  title << "random features SGD, " << (cfg.cyclic ? "cyclic " : "") << cfg.activation << ", d=" << cfg.d
        << ", N=" << cfg.num_features << ", n=" << cfg.sample_count();
  write_file_atomic(replace_extension(cfg.output, ".svg"), [&](std::ostream& os) {
    write_svg_plot(os, title.str(), "effective time", "error",
                   {{"train", c.t_eff, train_mean, "#1f77b4", false},
                    {"test", c.t_eff, test_mean, "#d62728", false},
                    {"oracle", c.t_eff, oracle_mean, "#2ca02c", true}},
                   true);
  });
}

AugmentReport augment_check(int d, int n, const Activation& sigma, std::span<const double> times,
                            std::uint64_t seed, int test_points, int K) {
  if (static_cast<long>(n) * d > 2000) {
    throw InputError("augmented system would have n*d = " + std::to_string(static_cast<long>(n) * d) +
                     " rows (n=" + std::to_string(n) + ", d=" + std::to_string(d) + "); the cap is 2000");
  }
  const KernelSpectrum spec = build_dot_kernel(sigma, d, K);
  const CyclicKernel ck = make_cyclic(spec);
  const Dataset ds = make_dataset(parse_target("quadratic", d), n, 0.0, derive_seed(seed, 0, 0));
  const Dataset aug = augment_cyclic(ds);
  auto rng = make_rng(derive_seed(seed, 0, 1), 0);
  const Eigen::MatrixXd X_test = sample_sphere(test_points, d, rng);

  const FlowSolution inv = solve_flow(cyclic_kernel_matrix(ck, ds.X), ds.y, static_cast<double>(d) / n);
  const FlowSolution dot = solve_flow(kernel_matrix(spec, aug.X), aug.y, 1.0 / n);
  const Eigen::MatrixXd C_inv = cyclic_kernel_cross(ck, X_test, ds.X);
  const Eigen::MatrixXd C_dot = kernel_cross(spec, X_test, aug.X);

  AugmentReport r;
  r.d = d;
  r.n = n;
  r.times.assign(times.begin(), times.end());
  for (double t : times) {
    const Eigen::VectorXd a = C_inv * coefficients(inv, t);
    const Eigen::VectorXd b = C_dot * coefficients(dot, t);
    const double disc = (a - b).cwiseAbs().maxCoeff();
    r.discrepancy.push_back(disc);
    r.max_discrepancy = std::max(r.max_discrepancy, disc);
  }
  return r;
}

StepsizeReport stepsize_report(const Activation& sigma, int d, int n, std::uint64_t seed, int K) {
  if (n > 5000) throw InputError("stepsize report needs n <= 5000");
  const KernelSpectrum spec = build_dot_kernel(sigma, d, K);
  const Dataset ds = make_dataset(parse_target("quadratic", d), n, 0.0, derive_seed(seed, 0, 0));
  StepsizeReport r;
  r.d = d;
  r.n = n;
  r.dot = default_step_size(kernel_matrix(spec, ds.X) / n);
  r.cyclic = default_step_size(cyclic_kernel_matrix(make_cyclic(spec), ds.X) / n);
  if (static_cast<long>(n) * d <= 2000) {
    r.augmented = default_step_size(kernel_matrix(spec, augment_cyclic(ds).X) / n);
    r.augmented_ratio = r.augmented.lambda_max / r.dot.lambda_max;
    r.ratio_in_band = r.augmented_ratio >= 0.5 * d && r.augmented_ratio <= 1.5 * d;
  } else {
    r.augmented.lambda_max = r.augmented.learning_rate = r.augmented.residual = nan_v;
    r.augmented_ratio = nan_v;
  }
  return r;
}

}  // namespace kdyn
