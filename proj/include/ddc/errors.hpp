#pragma once

#include <stdexcept>
#include <string>

namespace ddc {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An iterative numerical routine did not converge.
struct NumericalFailure : Error {
  using Error::Error;
};

// A matrix required to be positive semidefinite is not.
struct NotPsd : Error {
  using Error::Error;
};

// Incompatible matrix/vector dimensions.
struct DimensionError : Error {
  using Error::Error;
};

// A scalar argument is outside its admissible range.
struct DomainError : Error {
  using Error::Error;
};

// Malformed input file.
struct ParseError : Error {
  using Error::Error;
};

// Regressor data do not have full row rank.
struct RankDeficient : Error {
  using Error::Error;
};

// A problem handed to the conic solver is structurally invalid.
struct MalformedProblem : Error {
  using Error::Error;
};

// Data points do not pin down a bounded uncertainty set.
struct DegenerateData : Error {
  using Error::Error;
};

// Inputs for which the requested construction degenerates (e.g. zero vectors).
struct DegenerateInput : Error {
  using Error::Error;
};

// A monomial basis cannot represent the requested target degree.
struct BasisTooSmall : Error {
  using Error::Error;
};

// Polynomial degree windows are inconsistent with each other.
struct DegreeMismatch : Error {
  using Error::Error;
};

// Both sides of an alternation step were left free, leaving a bilinear program.
struct BilinearityError : Error {
  using Error::Error;
};

}  // namespace ddc
