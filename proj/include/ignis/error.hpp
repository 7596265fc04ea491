#pragma once

#include <stdexcept>
#include <string>

namespace ignis {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (θ range, t ∉ (0,1], ...).
class DomainError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    using Error::Error;
};

class QuadratureError : public Error {
public:
    using Error::Error;
};

class LengthMismatch : public Error {
public:
    using Error::Error;
};

class TooFewObservations : public Error {
public:
    using Error::Error;
};

/// A coordinate has zero variance, so a correlation is undefined.
class DegenerateInput : public Error {
public:
    using Error::Error;
};

/// |τ'(θ)| too small for the delta method.
class DegenerateDerivative : public Error {
public:
    using Error::Error;
};

class DegenerateResample : public Error {
public:
    using Error::Error;
};

class ScalerUnset : public Error {
public:
    using Error::Error;
};

class EmptyBatch : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class MissingColumn : public Error {
public:
    using Error::Error;
};

class EmptyAfterCleaning : public Error {
public:
    using Error::Error;
};

class NonPositivePrice : public Error {
public:
    using Error::Error;
};

} // namespace ignis
