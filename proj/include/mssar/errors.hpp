#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mssar {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A factorization of I - rho W reported a nonpositive determinant or a
// singular pivot. Under valid inputs this cannot happen.
class NumericalDegeneracy : public Error {
 public:
  using Error::Error;
};

// Every state is impossible at some period of the forward filter.
class UnderflowCollapse : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data (CSV, draws directory).
class DataError : public Error {
 public:
  using Error::Error;
};

// Configuration schema violation; `path` locates the offending field.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& message)
      : Error(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// Wraps a failure from inside a Gibbs sweep.
class SweepError : public Error {
 public:
  SweepError(std::size_t sweep, const std::string& what)
      : Error("sweep " + std::to_string(sweep) + ": " + what), sweep_(sweep) {}
  std::size_t sweep() const { return sweep_; }

 private:
  std::size_t sweep_;
};

}  // namespace mssar
