#pragma once

#include <stdexcept>
#include <string>

namespace polydyn {

// Interfaces, spaces or dimensions that do not line up.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An operation outside the exact regimes (finite support, affine Gaussian).
class UnsupportedError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Covariance or Hessian that cannot be inverted.
class SingularError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A constructor that verifies a commuting square found a counterexample.
class LawViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace polydyn
