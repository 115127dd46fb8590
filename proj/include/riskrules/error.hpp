#pragma once

#include <stdexcept>
#include <string>

namespace riskrules {

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A configuration value or flag violates its documented range.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Input data is malformed or unsuitable for the requested operation.
class DataError : public Error {
public:
    using Error::Error;
};

// The optimizer produced a non-finite value or could not proceed.
class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace riskrules
