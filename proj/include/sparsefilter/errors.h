#pragma once

#include <stdexcept>
#include <string>

namespace sparsefilter {

// Caller passed something outside an operation's domain.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An iterative numerical routine failed to converge or produced non-finite values.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A filter branch was entered but no admissible threshold exists. This means
// the constants are mis-tuned for the data, or the clean part of the data does
// not satisfy the good-set conditions the filters rely on.
class ContractError : public std::runtime_error {
 public:
  ContractError(const std::string& what, std::string diagnostics)
      : std::runtime_error(what + ": " + diagnostics),
        diagnostics_(std::move(diagnostics)) {}

  const std::string& diagnostics() const { return diagnostics_; }

 private:
  std::string diagnostics_;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sparsefilter
