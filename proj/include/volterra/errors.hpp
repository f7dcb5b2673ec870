#pragma once

#include <stdexcept>
#include <string>

namespace volterra {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of the function (e.g. t outside [0,T]).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration: bad sizes, rule orders, grid parameters, CLI fields.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// The integrand returned a non-finite value.
class IntegrandError : public Error {
public:
    using Error::Error;
};

class AssemblyError : public Error {
public:
    using Error::Error;
};

/// Factorization or solve failed (typically non-finite matrix entries).
class NumericalError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace volterra
