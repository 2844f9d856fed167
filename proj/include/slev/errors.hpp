#pragma once

#include <stdexcept>
#include <string>

namespace slev {

/// Coarse error classes. The CLI maps them onto process exit codes.
enum class ErrorKind { invalid_input, degenerate, config, data, io };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InvalidInput : public Error {
 public:
  explicit InvalidInput(const std::string& what) : Error(ErrorKind::invalid_input, what) {}
};

/// Denominator of a ratio estimator is not strictly positive.
class DegenerateDenominator : public Error {
 public:
  DegenerateDenominator(const std::string& what, double fev, double fevv)
      : Error(ErrorKind::degenerate, what), fev_(fev), fevv_(fevv) {}
  double fev() const noexcept { return fev_; }
  double fevv() const noexcept { return fevv_; }

 private:
  double fev_;
  double fevv_;
};

/// The selected control variate has zero sample variance.
class DegenerateControl : public Error {
 public:
  explicit DegenerateControl(const std::string& what) : Error(ErrorKind::degenerate, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

}  // namespace slev
