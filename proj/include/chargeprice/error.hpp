#pragma once

#include <stdexcept>
#include <string>

namespace chargeprice {

/// Bad input: malformed files, broken invariants, inconsistent configuration.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parse failure pinned to a file line.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& source, int line, const std::string& what)
      : ValidationError(source + ":" + std::to_string(line) + ": " + what),
        source_(source),
        line_(line) {}

  const std::string& source() const noexcept { return source_; }
  int line() const noexcept { return line_; }

 private:
  std::string source_;
  int line_;
};

/// A solver failed to reach its numerical contract.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace chargeprice
