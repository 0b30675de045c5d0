#pragma once

#include <stdexcept>
#include <string>

namespace imret {

/// Base class for all errors raised by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad invocation: unknown flag, missing argument, value outside a contract.
class UsageError : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent data: file format violations, dimension
/// mismatches, unknown ids, invariant violations.
class DataError : public Error {
public:
    using Error::Error;
};

/// An iterative solver exhausted its budget before meeting its tolerance.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

} // namespace imret
