#pragma once

#include <stdexcept>

namespace stratbox {

/// Base class of every error thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Problem data violates the feasibility preconditions
/// (non-positive coefficient, bad bounds, total outside [sum of lower
/// bounds, sum of upper bounds], empty or duplicated labels).
class InfeasibleProblem : public Error {
 public:
  using Error::Error;
};

/// The take-min and take-max sets of a partition intersect.
class OverlappingSets : public Error {
 public:
  using Error::Error;
};

/// The scale factor was requested for a partition that pins every stratum,
/// leaving no stratum to scale.
class PartitionCoversAll : public Error {
 public:
  using Error::Error;
};

/// An allocation value is zero or negative where a positive one is required.
class NonPositiveAllocation : public Error {
 public:
  using Error::Error;
};

/// A stratum standard deviation is zero (or negative); the resulting
/// coefficient would be unusable downstream.
class ZeroVariance : public Error {
 public:
  using Error::Error;
};

/// A multiplier argument must be strictly positive.
class NonPositiveLambda : public Error {
 public:
  using Error::Error;
};

/// Exhaustive enumeration was requested for more strata than it can handle.
class TooManyStrata : public Error {
 public:
  using Error::Error;
};

/// The values handed to the rounder do not sum to the requested total.
class SumMismatch : public Error {
 public:
  using Error::Error;
};

/// The bisection bracket endpoints do not enclose a sign change.
class BracketFailure : public Error {
 public:
  using Error::Error;
};

/// A value range collapsed to a single point where a spread is required.
class DegenerateRange : public Error {
 public:
  using Error::Error;
};

/// An allocation object is inconsistent with the problem it claims to solve.
class MalformedAllocation : public Error {
 public:
  using Error::Error;
};

}  // namespace stratbox
