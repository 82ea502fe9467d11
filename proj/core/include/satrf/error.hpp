#pragma once

#include <stdexcept>
#include <string>

namespace satrf {

/// Malformed or inconsistent input data (bad CSV, dimension mismatch, too few rows).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// A numerical routine produced a non-finite value or broke an invariant it promises.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace satrf
