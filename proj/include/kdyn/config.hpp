#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace kdyn {

// Flat key = value configuration shared by the flow and random-feature runs.
struct ExperimentConfig {
  int d = 100;
  double n_exponent = 1.5;  // n = round(d^n_exponent) unless n > 0
  int n = 0;
  std::string activation = "relu";
  bool cyclic = false;
  int K = 30;
  int quad_order = 200;
  std::string target = "quadratic";
  double sigma_eps2 = 0.0;
  int trials = 10;
  int test_set_size = 2000;
  std::string test_method = "mc";  // mc | analytic
  std::string grid = "log";        // log | linear
  double t_min_exponent = 0.1;
  double t_max_exponent = -1.0;  // negative: floor(log_d n) + 1.2
  int points_per_decade = 12;
  int linear_points = 40;
  double linear_max_exponent = 0.4;  // linear grid spans (0, n d^e]
  std::uint64_t seed = 1;
  std::string output = "flow.csv";

  // Random-feature SGD.
  int num_features = 20000;
  double learning_rate = 0.1;  // 0 selects c / lambda_max of the normalized kernel matrix
  int batch_size = 50;
  double momentum = 0.9;
  long steps = 1000;
  int eval_points = 25;
  std::string world = "both";  // both | empirical | oracle

  int sample_count() const;
  double effective_t_max_exponent() const;
};

// Canonical ordered key=value pairs (no spaces inside values).
std::vector<std::pair<std::string, std::string>> config_items(const ExperimentConfig& cfg);

// Applies one key=value pair; throws ConfigError on unknown keys or bad values.
void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value);
// Accepts "key=value".
void apply_override(ExperimentConfig& cfg, std::string_view assignment);

// Lines "key = value"; '#' starts a comment. Validates the result.
ExperimentConfig parse_config(std::istream& is);
ExperimentConfig load_config(const std::string& path);

// Throws ConfigError if the invariants fail.
void validate(const ExperimentConfig& cfg);

// Times at which curves are evaluated.
std::vector<double> time_grid(const ExperimentConfig& cfg);

// Parses a "# key=value key=value ..." metadata line.
std::map<std::string, std::string> parse_metadata_line(std::string_view line);

}  // namespace kdyn
