#pragma once

#include <stdexcept>
#include <string>

namespace snipsde {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller-supplied argument violates a documented precondition.
class ArgumentError : public Error {
public:
    using Error::Error;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

/// Malformed cell in a delimited input file. `row()` is the 1-based line number.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t row) : Error(what), row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class ModeMismatchError : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

class SingularDesignError : public Error {
public:
    using Error::Error;
};

class InfeasibleBandwidthError : public Error {
public:
    using Error::Error;
};

class BandwidthGridTooSmallError : public Error {
public:
    using Error::Error;
};

class InconsistentConditioningError : public Error {
public:
    using Error::Error;
};

/// Too many replicates of an ensemble hit a non-finite prediction.
class EnsembleError : public Error {
public:
    using Error::Error;
};

class OutOfRangeError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

} // namespace snipsde
