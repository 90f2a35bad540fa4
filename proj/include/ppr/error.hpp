#pragma once

#include <stdexcept>
#include <string>

namespace ppr {

// Root of every exception the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation
// (negative penalty argument, lookup outside a raster, delta <= 0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

class DegenerateWindowError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Invalid combination of user-facing settings.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class RankError : public Error {
 public:
  using Error::Error;
};

// Internal solver inconsistency, e.g. the surrogate objective increased on a
// convex problem.
class AlgorithmError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ppr
