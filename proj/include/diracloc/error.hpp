#pragma once

#include <stdexcept>
#include <string>

namespace diracloc {

// Base of everything the library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller violated an operation's precondition (bad parameter, bad grid).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// A numerical procedure could not deliver its post-condition
// (no bracket, eigensolver failure, quadrature non-convergence).
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Run-config problems, with the offending field path.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error("config field '" + field + "': " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace diracloc
