#pragma once

#include <stdexcept>
#include <string>

namespace decomp {

// Base class for pipeline errors. The CLI maps ValidationError to exit
// code 1 and TransportError to exit code 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad input data, bad parameters, broken invariants.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Teacher/embedding endpoint failures: exhausted retries, timeouts,
// missing scripted entries.
class TransportError : public Error {
public:
    explicit TransportError(const std::string& msg, int status = 0)
        : Error(msg), last_status(status) {}
    int last_status;
};

// Authentication failures are never retried.
class AuthError : public TransportError {
public:
    using TransportError::TransportError;
};

// Per-example teacher-call budget exhausted (decomposer safety valve).
class BudgetExceededError : public Error {
public:
    using Error::Error;
};

}  // namespace decomp
