#pragma once

#include <stdexcept>
#include <string>

namespace holefill {

/// Base for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid lattice parameters, malformed index sets, mismatched shapes.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Bad configuration values or unreadable input files.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// The recovery system is (numerically) singular.
class IllPosedError : public Error {
 public:
  IllPosedError(const std::string& what, double sigma) : Error(what), sigma_(sigma) {}
  double sigma() const { return sigma_; }

 private:
  double sigma_;
};

/// An iterative method ran out of iterations.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace holefill
