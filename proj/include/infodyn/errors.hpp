#ifndef INFODYN_ERRORS_HPP
#define INFODYN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace infodyn {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A constructor or operation precondition was violated.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Every likelihood underflowed to zero: the observation lies far outside
/// the model support.
class ZeroMarginal : public Error {
public:
    using Error::Error;
};

/// Adaptive integration could not reach the requested tolerance.
class QuadratureFailure : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// The analytic averaged-density route requires zero-phase amplitudes.
class PhasePresent : public Error {
public:
    using Error::Error;
};

class NumericalFailure : public Error {
public:
    using Error::Error;
};

/// A trajectory step produced a state outside the renormalisation budget.
class StabilityViolation : public Error {
public:
    using Error::Error;
};

/// An ensemble did not meet its convergence criterion at the horizon.
class NonConverged : public Error {
public:
    using Error::Error;
};

/// Too few usable points above the Monte Carlo noise floor for a fit.
class FitFailure : public Error {
public:
    using Error::Error;
};

class NegativeBits : public Error {
public:
    using Error::Error;
};

} // namespace infodyn

#endif
