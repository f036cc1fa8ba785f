#pragma once

#include <stdexcept>
#include <string>

namespace dpslr {

// Base class for every error this library raises on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numeric argument is NaN or otherwise outside its documented domain.
class InvalidValue : public Error {
 public:
  using Error::Error;
};

// A ledger spend would push cumulative epsilon/delta/rho past the total.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

// A privacy budget is malformed for the requested flavor.
class InvalidBudget : public Error {
 public:
  using Error::Error;
};

// All x values coincide, so nvar(x) = 0 and no slope is defined.
class DegenerateX : public Error {
 public:
  using Error::Error;
};

class TooFewPoints : public Error {
 public:
  using Error::Error;
};

// Every candidate pair had identical x coordinates.
class NoValidPairs : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

// An output/search range [r_l, r_u] with r_l >= r_u.
class InvalidRange : public Error {
 public:
  using Error::Error;
};

// Every trial in a report failed, so no finite error bound exists.
class AllFailures : public Error {
 public:
  using Error::Error;
};

class EmptyFamily : public Error {
 public:
  using Error::Error;
};

class InvalidSpec : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// CSV/JSON input that does not parse; carries a line number when known.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what, long line = -1)
      : Error(line >= 0 ? what + " (line " + std::to_string(line) + ")"
                        : what),
        line_(line) {}

  long line() const { return line_; }

 private:
  long line_;
};

}  // namespace dpslr
