#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace kdyn {

// A scalar function R -> R together with the points where it fails to be
// smooth. Quadrature routines split integration ranges at the kinks.
struct Activation {
  std::string id;
  std::function<double(double)> fn;
  std::vector<double> kinks;

  double operator()(double x) const { return fn(x); }
  bool smooth() const { return kinks.empty(); }
};

namespace activations {

Activation relu();
Activation identity();
Activation constant(double c);
// Probabilists' Hermite polynomial He_k.
Activation hermite(int k);
Activation scaled(const Activation& a, double c);
Activation sum(const Activation& a, const Activation& b);

}  // namespace activations

// Parses descriptors such as "relu", "relu+0.1*he3", "2*relu", "id", "const:1.5".
// Throws ConfigError on malformed input.
Activation parse_activation(std::string_view descriptor);

// Probabilists' Hermite polynomials He_0..He_k at x.
void hermite_all(int k, double x, std::vector<double>& out);
double hermite_he(int k, double x);

}  // namespace kdyn
