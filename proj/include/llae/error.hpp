#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace llae {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Shape or argument contract violated by the caller.
class DimensionError : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

// A numeric routine could not produce a result (non-convergence, singular system).
class NumericError : public Error {
public:
    using Error::Error;
};

// A(i) + B(j) eigenvalue collision in the Sylvester back-substitution.
class SpectralOverlapError : public NumericError {
public:
    using NumericError::NumericError;
};

// Malformed or unreadable input data.
class DataError : public Error {
public:
    using Error::Error;
};

class ParseError : public DataError {
public:
    ParseError(const std::string& what, std::size_t line)
        : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Model file problems; each failure mode has its own type.
class FormatError : public DataError {
public:
    using DataError::DataError;
};

class MagicError : public FormatError {
public:
    using FormatError::FormatError;
};

class VersionError : public FormatError {
public:
    using FormatError::FormatError;
};

class TruncatedError : public FormatError {
public:
    using FormatError::FormatError;
};

class ChecksumError : public FormatError {
public:
    using FormatError::FormatError;
};

}  // namespace llae
