#pragma once

#include <stdexcept>
#include <string>

namespace modflow {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument or an input outside the domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Möbius denominator |cz+d|^2 underflowed.
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

/// Reduction to the fundamental domain hit its iteration cap.
class NonConvergenceError : public Error {
public:
    NonConvergenceError(const std::string& what, double last_x, double last_y)
        : Error(what), last_x(last_x), last_y(last_y) {}
    double last_x;
    double last_y;
};

/// The image left the upper half-plane (v below the positivity floor).
class TargetEscapeError : public Error {
public:
    TargetEscapeError(const std::string& what, std::size_t i, std::size_t j)
        : Error(what), node_i(i), node_j(j) {}
    std::size_t node_i;
    std::size_t node_j;
};

/// A time step produced a non-positive v; retry with a smaller dt.
class StepRejectedError : public Error {
public:
    using Error::Error;
};

/// Configuration text could not be parsed or validated.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed or missing persisted file.
class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace modflow
