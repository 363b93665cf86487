#include "kdyn/activation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "kdyn/errors.hpp"

namespace kdyn {

void hermite_all(int k, double x, std::vector<double>& out) {
  out.assign(static_cast<std::size_t>(k) + 1, 0.0);
  out[0] = 1.0;
  if (k >= 1) out[1] = x;
  for (int j = 1; j < k; ++j) out[j + 1] = x * out[j] - j * out[j - 1];
}

double hermite_he(int k, double x) {
  if (k == 0) return 1.0;
  double prev = 1.0, cur = x;
  for (int j = 1; j < k; ++j) {
    const double next = x * cur - j * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

namespace activations {

Activation relu() {
  return {"relu", [](double x) { return x > 0.0 ? x : 0.0; }, {0.0}};
}

Activation identity() {
  return {"id", [](double x) { return x; }, {}};
}

Activation constant(double c) {
  std::ostringstream os;
  os.precision(17);
  os << "const:" << c;
  return {os.str(), [c](double) { return c; }, {}};
}

Activation hermite(int k) {
  if (k < 0) throw InputError("hermite activation needs k >= 0");
  return {"he" + std::to_string(k), [k](double x) { return hermite_he(k, x); }, {}};
}

Activation scaled(const Activation& a, double c) {
  std::ostringstream os;
  os.precision(17);
  os << c << "*" << a.id;
  auto f = a.fn;
  return {os.str(), [f, c](double x) { return c * f(x); }, a.kinks};
}

Activation sum(const Activation& a, const Activation& b) {
  auto fa = a.fn;
  auto fb = b.fn;
  std::vector<double> kinks = a.kinks;
  kinks.insert(kinks.end(), b.kinks.begin(), b.kinks.end());
  std::sort(kinks.begin(), kinks.end());
  kinks.erase(std::unique(kinks.begin(), kinks.end()), kinks.end());
  return {a.id + "+" + b.id, [fa, fb](double x) { return fa(x) + fb(x); }, std::move(kinks)};
}

}  // namespace activations

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(const std::string& s, std::string_view context) {
  double v = 0.0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw ConfigError("bad number '" + s + "' in activation '" + std::string(context) + "'");
  }
  return v;
}

Activation parse_term(const std::string& term, std::string_view full) {
  // [coef[*]]name
  std::size_t i = 0;
  while (i < term.size() && (std::isdigit(static_cast<unsigned char>(term[i])) || term[i] == '.' ||
                             term[i] == 'e' || term[i] == '-')) {
    // 'e' only counts as exponent when followed by a digit or sign after digits
    if (term[i] == 'e' && (i == 0 || i + 1 >= term.size() ||
                           !(std::isdigit(static_cast<unsigned char>(term[i + 1])) || term[i + 1] == '-'))) {
      break;
    }
    ++i;
  }
  double coef = 1.0;
  std::string name = term;
  if (i > 0) {
    coef = parse_double(term.substr(0, i), full);
    name = term.substr(i);
    if (!name.empty() && name[0] == '*') name = name.substr(1);
  }
  name = trim(name);
  Activation base;
  if (name == "relu") {
    base = activations::relu();
  } else if (name == "id" || name == "x" || name == "linear") {
    base = activations::identity();
  } else if (name.rfind("const:", 0) == 0) {
    base = activations::constant(parse_double(name.substr(6), full));
  } else if (name.empty() || name == "one") {
    base = activations::constant(1.0);
  } else if (name.rfind("he", 0) == 0 && name.size() > 2) {
    const double k = parse_double(name.substr(2), full);
    if (k != std::floor(k) || k < 0 || k > 64) {
      throw ConfigError("bad Hermite degree in activation '" + std::string(full) + "'");
    }
    base = activations::hermite(static_cast<int>(k));
  } else {
    throw ConfigError("unknown activation term '" + name + "' in '" + std::string(full) + "'");
  }
  if (coef == 1.0) return base;
  return activations::scaled(base, coef);
}

}  // namespace

Activation parse_activation(std::string_view descriptor) {
  const std::string text = trim(descriptor);
  if (text.empty()) throw ConfigError("empty activation descriptor");
  std::vector<std::string> terms;
  std::size_t start = 0;
  for (std::size_t i = 1; i <= text.size(); ++i) {
    // split on '+' that is not an exponent sign
    if (i == text.size() || (text[i] == '+' && text[i - 1] != 'e')) {
      terms.push_back(trim(std::string_view(text).substr(start, i - start)));
      start = i + 1;
    }
  }
  Activation out;
  bool first = true;
  for (const auto& t : terms) {
    if (t.empty()) throw ConfigError("empty term in activation '" + text + "'");
    Activation a = parse_term(t, text);
    out = first ? a : activations::sum(out, a);
    first = false;
  }
  out.id = text;
  return out;
}

}  // namespace kdyn
