#include "kdyn/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "kdyn/errors.hpp"

namespace kdyn {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(std::string_view key, std::string_view v) {
  T out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("bad value '" + std::string(v) + "' for key '" + std::string(key) + "'");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("bad boolean '" + std::string(v) + "' for key '" + std::string(key) + "'");
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void check_token(std::string_view key, const std::string& v) {
  if (v.empty() || v.find_first_of(" \t#=") != std::string::npos) {
    throw ConfigError("value for '" + std::string(key) + "' must be a nonempty token without spaces, '#' or '='");
  }
}

}  // namespace

int ExperimentConfig::sample_count() const {
  if (n > 0) return n;
  return static_cast<int>(std::lround(std::pow(static_cast<double>(d), n_exponent)));
}

double ExperimentConfig::effective_t_max_exponent() const {
  if (t_max_exponent >= 0.0) return t_max_exponent;
  const double s = std::floor(std::log(static_cast<double>(sample_count())) / std::log(static_cast<double>(d)));
  return s + 1.2;
}

std::vector<std::pair<std::string, std::string>> config_items(const ExperimentConfig& c) {
  return {{"d", std::to_string(c.d)},
          {"n_exponent", num(c.n_exponent)},
          {"n", std::to_string(c.n)},
          {"activation", c.activation},
          {"cyclic", c.cyclic ? "true" : "false"},
          {"K", std::to_string(c.K)},
          {"quad_order", std::to_string(c.quad_order)},
          {"target", c.target},
          {"sigma_eps2", num(c.sigma_eps2)},
          {"trials", std::to_string(c.trials)},
          {"test_set_size", std::to_string(c.test_set_size)},
          {"test_method", c.test_method},
          {"grid", c.grid},
          {"t_min_exponent", num(c.t_min_exponent)},
          {"t_max_exponent", num(c.t_max_exponent)},
          {"points_per_decade", std::to_string(c.points_per_decade)},
          {"linear_points", std::to_string(c.linear_points)},
          {"linear_max_exponent", num(c.linear_max_exponent)},
          {"seed", std::to_string(c.seed)},
          {"output", c.output},
          {"num_features", std::to_string(c.num_features)},
          {"learning_rate", num(c.learning_rate)},
          {"batch_size", std::to_string(c.batch_size)},
          {"momentum", num(c.momentum)},
          {"steps", std::to_string(c.steps)},
          {"eval_points", std::to_string(c.eval_points)},
          {"world", c.world}};
}

void set_config_value(ExperimentConfig& c, std::string_view key, std::string_view value) {
  const std::string v = trim(value);
  if (key == "d") c.d = parse_number<int>(key, v);
  else if (key == "n_exponent") c.n_exponent = parse_number<double>(key, v);
  else if (key == "n") c.n = parse_number<int>(key, v);
  else if (key == "activation") c.activation = v;
  else if (key == "cyclic") c.cyclic = parse_bool(key, v);
  else if (key == "K") c.K = parse_number<int>(key, v);
  else if (key == "quad_order") c.quad_order = parse_number<int>(key, v);
  else if (key == "target") c.target = v;
  else if (key == "sigma_eps2") c.sigma_eps2 = parse_number<double>(key, v);
  else if (key == "trials") c.trials = parse_number<int>(key, v);
  else if (key == "test_set_size") c.test_set_size = parse_number<int>(key, v);
  else if (key == "test_method") c.test_method = v;
  else if (key == "grid") c.grid = v;
  else if (key == "t_min_exponent") c.t_min_exponent = parse_number<double>(key, v);
  else if (key == "t_max_exponent") c.t_max_exponent = parse_number<double>(key, v);
  else if (key == "points_per_decade") c.points_per_decade = parse_number<int>(key, v);
  else if (key == "linear_points") c.linear_points = parse_number<int>(key, v);
  else if (key == "linear_max_exponent") c.linear_max_exponent = parse_number<double>(key, v);
  else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, v);
  else if (key == "output") c.output = v;
  else if (key == "num_features") c.num_features = parse_number<int>(key, v);
  else if (key == "learning_rate") c.learning_rate = parse_number<double>(key, v);
  else if (key == "batch_size") c.batch_size = parse_number<int>(key, v);
  else if (key == "momentum") c.momentum = parse_number<double>(key, v);
  else if (key == "steps") c.steps = parse_number<long>(key, v);
  else if (key == "eval_points") c.eval_points = parse_number<int>(key, v);
  else if (key == "world") c.world = v;
  else throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void apply_override(ExperimentConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  }
  set_config_value(cfg, trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

ExperimentConfig parse_config(std::istream& is) {
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    set_config_value(cfg, trim(std::string_view(body).substr(0, eq)),
                     std::string_view(body).substr(eq + 1));
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

void validate(const ExperimentConfig& c) {
  if (c.d < 3) throw ConfigError("d must be >= 3");
  if (!std::isfinite(c.n_exponent) || c.n_exponent <= 0.0) throw ConfigError("n_exponent must be positive");
  if (c.n < 0) throw ConfigError("n must be >= 0");
  if (c.sample_count() < 1) throw ConfigError("sample count must be >= 1");
  if (c.K < 1) throw ConfigError("K must be >= 1");
  if (c.quad_order < 2) throw ConfigError("quad_order must be >= 2");
  if (!(c.sigma_eps2 >= 0.0)) throw ConfigError("sigma_eps2 must be >= 0");
  if (c.trials < 1) throw ConfigError("trials must be >= 1");
  if (c.test_set_size < 1) throw ConfigError("test_set_size must be >= 1");
  if (c.test_method != "mc" && c.test_method != "analytic") throw ConfigError("test_method must be mc or analytic");
  if (c.grid != "log" && c.grid != "linear") throw ConfigError("grid must be log or linear");
  if (!std::isfinite(c.t_min_exponent) || !std::isfinite(c.t_max_exponent) ||
      !std::isfinite(c.linear_max_exponent)) {
    throw ConfigError("time exponents must be finite");
  }
  if (c.points_per_decade < 1) throw ConfigError("points_per_decade must be >= 1");
  if (c.linear_points < 2) throw ConfigError("linear_points must be >= 2");
  if (c.effective_t_max_exponent() <= c.t_min_exponent) {
    throw ConfigError("t_max_exponent must exceed t_min_exponent");
  }
  check_token("activation", c.activation);
  check_token("target", c.target);
  check_token("output", c.output);
  if (c.num_features < 1) throw ConfigError("num_features must be >= 1");
  if (!(c.learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
  if (c.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(c.momentum >= 0.0 && c.momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (c.steps < 1) throw ConfigError("steps must be >= 1");
  if (c.eval_points < 2) throw ConfigError("eval_points must be >= 2");
  if (c.world != "both" && c.world != "empirical" && c.world != "oracle") {
    throw ConfigError("world must be both, empirical or oracle");
  }
}

std::vector<double> time_grid(const ExperimentConfig& c) {
  std::vector<double> t;
  const double d = c.d;
  if (c.grid == "linear") {
    const double tmax = c.sample_count() * std::pow(d, c.linear_max_exponent);
    for (int i = 1; i <= c.linear_points; ++i) t.push_back(tmax * i / c.linear_points);
    return t;
  }
  const double lo = c.t_min_exponent * std::log10(d);
  const double hi = c.effective_t_max_exponent() * std::log10(d);
  const int count = std::max(2, static_cast<int>(std::ceil((hi - lo) * c.points_per_decade)) + 1);
  for (int i = 0; i < count; ++i) t.push_back(std::pow(10.0, lo + (hi - lo) * i / (count - 1)));
  return t;
}

std::map<std::string, std::string> parse_metadata_line(std::string_view line) {
  if (line.rfind("# ", 0) != 0) throw ConfigError("metadata line must start with '# '");
  std::map<std::string, std::string> kv;
  std::istringstream is{std::string(line.substr(2))};
  std::string tok;
  while (is >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw ConfigError("malformed metadata token '" + tok + "'");
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return kv;
}

}  // namespace kdyn
