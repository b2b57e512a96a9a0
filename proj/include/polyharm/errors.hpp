#pragma once

#include <stdexcept>
#include <string>

namespace polyharm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid input: argument out of range, unsupported configuration,
/// mismatched domains. Maps to CLI exit status 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Iterative method failed to converge, singular factorization.
/// Maps to CLI exit status 3.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

/// The energy has no mountain-pass shape between 0 and any endpoint tried.
class GeometryFailure : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

/// A nonlinearity fails (H0)/(H1)/sign hypotheses, numerically.
/// Maps to CLI exit status 4.
class HypothesisFailure : public Error {
 public:
  using Error::Error;
};

/// Violated internal invariant (a precondition slipped past validation).
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace polyharm
