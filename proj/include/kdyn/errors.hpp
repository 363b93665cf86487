#pragma once

#include <stdexcept>
#include <string>

namespace kdyn {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user-supplied inputs: dimensions, point sets off the sphere, sizes.
class InputError : public Error {
 public:
  using Error::Error;
};

// Malformed configuration (unknown keys, unparsable values).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Quadrature failure, solver failure, divergence, negative spectra.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Exact integer arithmetic would exceed the platform width.
class OverflowError : public Error {
 public:
  using Error::Error;
};

}  // namespace kdyn
