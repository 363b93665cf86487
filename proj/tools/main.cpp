#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "kdyn/config.hpp"
#include "kdyn/errors.hpp"
#include "kdyn/experiments.hpp"
#include "kdyn/kernels.hpp"
#include "kdyn/output.hpp"

namespace {

constexpr int exit_config = 2;
constexpr int exit_numerical = 3;

kdyn::ExperimentConfig resolve_config(const std::string& path, const std::vector<std::string>& overrides) {
  kdyn::ExperimentConfig cfg = path.empty() ? kdyn::ExperimentConfig{} : kdyn::load_config(path);
  for (const auto& o : overrides) kdyn::apply_override(cfg, o);
  kdyn::validate(cfg);
  return cfg;
}

void run_flow(const kdyn::ExperimentConfig& cfg) {
  const auto curves = kdyn::run_flow_experiment(cfg);
  kdyn::write_flow_outputs(curves, cfg);
  std::cout << "wrote " << cfg.output << " (" << curves.times.size() << " rows, " << curves.trials()
            << " trials)\n";
}

void run_rf(const kdyn::ExperimentConfig& cfg) {
  const auto curves = kdyn::run_rf_experiment(cfg);
  kdyn::write_rf_outputs(curves, cfg);
  std::cout << "wrote " << cfg.output << " (" << curves.iterations.size() << " rows, learning rate "
            << curves.learning_rate << ")\n";
}

// Rebuilds the config from a CSV metadata line and reruns the recorded command.
void replay(const std::string& csv, const std::vector<std::string>& overrides) {
  std::ifstream in(csv);
  if (!in) throw kdyn::ConfigError("cannot open '" + csv + "'");
  std::string line;
  std::getline(in, line);
  const auto meta = kdyn::parse_metadata_line(line);
  const auto cmd = meta.find("command");
  if (cmd == meta.end()) throw kdyn::ConfigError("metadata line has no command");
  kdyn::ExperimentConfig cfg;
  for (const auto& [key, value] : kdyn::config_items(cfg)) {
    const auto it = meta.find(key);
    if (it == meta.end()) throw kdyn::ConfigError("metadata line lacks config key '" + key + "'");
    kdyn::set_config_value(cfg, key, it->second);
  }
  for (const auto& o : overrides) kdyn::apply_override(cfg, o);
  kdyn::validate(cfg);
  if (cmd->second == "flow") {
    run_flow(cfg);
  } else if (cmd->second == "rf-sgd") {
    run_rf(cfg);
  } else {
    throw kdyn::ConfigError("cannot replay command '" + cmd->second + "'");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gradient-flow and random-feature SGD dynamics of dot-product and cyclic kernels on the sphere"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;

  auto* spectrum = app.add_subcommand("spectrum", "Print the kernel eigenvalues by degree");
  std::string spec_activation = "relu";
  int spec_d = 100, spec_K = 30, spec_quad = 200;
  spectrum->add_option("--activation", spec_activation, "activation descriptor");
  spectrum->add_option("-d,--dim", spec_d, "ambient dimension")->check(CLI::PositiveNumber);
  spectrum->add_option("-K,--max-degree", spec_K, "truncation degree")->check(CLI::PositiveNumber);
  spectrum->add_option("--quad-order", spec_quad, "quadrature nodes")->check(CLI::PositiveNumber);

  auto* flow = app.add_subcommand("flow", "Gradient-flow train/test/oracle curves");
  flow->add_option("--config", config_path, "key = value config file");
  flow->add_option("--set", overrides, "override, key=value (repeatable)");

  auto* rf = app.add_subcommand("rf-sgd", "SGD on two-layer random-feature models");
  rf->add_option("--config", config_path, "key = value config file");
  rf->add_option("--set", overrides, "override, key=value (repeatable)");

  auto* aug = app.add_subcommand("augment-check", "Cyclic kernel flow vs dot kernel flow on augmented data");
  int aug_d = 6, aug_n = 5, aug_points = 10, aug_K = 30;
  double aug_tmin = 0.1, aug_tmax = 1e4;
  std::string aug_activation = "relu";
  std::uint64_t aug_seed = 1;
  aug->add_option("-d,--dim", aug_d, "ambient dimension");
  aug->add_option("-n,--samples", aug_n, "training points");
  aug->add_option("--activation", aug_activation, "activation descriptor");
  aug->add_option("--times", aug_points, "number of log-spaced times")->check(CLI::PositiveNumber);
  aug->add_option("--t-min", aug_tmin, "first time")->check(CLI::PositiveNumber);
  aug->add_option("--t-max", aug_tmax, "last time")->check(CLI::PositiveNumber);
  aug->add_option("-K,--max-degree", aug_K, "truncation degree");
  aug->add_option("--seed", aug_seed, "seed");

  auto* step = app.add_subcommand("stepsize", "Largest eigenvalue of the normalized kernel matrix and step size");
  int step_d = 6, step_n = 5, step_K = 30;
  std::string step_activation = "relu";
  std::uint64_t step_seed = 1;
  step->add_option("-d,--dim", step_d, "ambient dimension");
  step->add_option("-n,--samples", step_n, "training points");
  step->add_option("--activation", step_activation, "activation descriptor");
  step->add_option("-K,--max-degree", step_K, "truncation degree");
  step->add_option("--seed", step_seed, "seed");

  auto* rep = app.add_subcommand("replay", "Rerun the experiment recorded in a CSV metadata line");
  std::string replay_path;
  rep->add_option("csv", replay_path, "CSV written by flow or rf-sgd")->required();
  rep->add_option("--set", overrides, "override, key=value (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_config;
  }

  try {
    if (*spectrum) {
      const auto spec = kdyn::build_dot_kernel(kdyn::parse_activation(spec_activation), spec_d, spec_K, spec_quad);
      kdyn::write_spectrum_table(std::cout, spec);
    } else if (*flow) {
      run_flow(resolve_config(config_path, overrides));
    } else if (*rf) {
      run_rf(resolve_config(config_path, overrides));
    } else if (*aug) {
      std::vector<double> times;
      for (int i = 0; i < aug_points; ++i) {
        const double f = aug_points == 1 ? 0.0 : static_cast<double>(i) / (aug_points - 1);
        times.push_back(aug_tmin * std::pow(aug_tmax / aug_tmin, f));
      }
      const auto r = kdyn::augment_check(aug_d, aug_n, kdyn::parse_activation(aug_activation), times, aug_seed, 20,
                                         aug_K);
      std::cout.precision(6);
      std::cout << "t max_abs_discrepancy\n";
      for (std::size_t i = 0; i < r.times.size(); ++i) std::cout << r.times[i] << ' ' << r.discrepancy[i] << '\n';
      std::cout << "max discrepancy " << r.max_discrepancy << " (d=" << r.d << ", n=" << r.n << ")\n";
    } else if (*step) {
      const auto r = kdyn::stepsize_report(kdyn::parse_activation(step_activation), step_d, step_n, step_seed, step_K);
      std::cout.precision(6);
      std::cout << "kernel lambda_max learning_rate\n";
      std::cout << "dot " << r.dot.lambda_max << ' ' << r.dot.learning_rate << '\n';
      std::cout << "cyclic " << r.cyclic.lambda_max << ' ' << r.cyclic.learning_rate << '\n';
      std::cout << "augmented " << r.augmented.lambda_max << ' ' << r.augmented.learning_rate << '\n';
      std::cout << "augmented/dot " << r.augmented_ratio << " (expected about d=" << r.d << ", "
                << (r.ratio_in_band ? "within" : "outside") << " [0.5d, 1.5d])\n";
    } else if (*rep) {
      replay(replay_path, overrides);
    }
  } catch (const kdyn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const kdyn::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return exit_numerical;
  } catch (const kdyn::OverflowError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return exit_numerical;
  } catch (const kdyn::InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return exit_config;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
