#pragma once

#include <stdexcept>
#include <string>

namespace coevo {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-range arguments (non-finite payoffs, n < 2, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A logit-chart operation was asked to work on a boundary state.
class ChartDomainError : public Error {
 public:
  using Error::Error;
};

/// NaN/inf in a vector field, diverging Q-values, failed solves.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Adaptive step size fell below the floor.
class StiffnessError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Analysis requested at a state whose flow residual is too large.
class NotRestPoint : public Error {
 public:
  using Error::Error;
};

/// The state does not have the link topology an analytic formula assumes.
class TopologyMismatch : public Error {
 public:
  using Error::Error;
};

}  // namespace coevo
