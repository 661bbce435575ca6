#pragma once

#include <stdexcept>
#include <string>

namespace sepp {

// Bad inputs: malformed files, keys, parameters outside their valid region.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Runtime numerical failures: singular matrices, unmet quadrature tolerances,
// non-convergence that cannot be returned as a partial result.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sepp
