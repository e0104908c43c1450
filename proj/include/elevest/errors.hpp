#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace elevest {

// Root of every error thrown by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Input text or binary that does not follow its format. `line()` is 1-based
// for text formats and 0 when not applicable.
class ParseError : public Error {
public:
    explicit ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class BadMagicError : public ParseError {
public:
    using ParseError::ParseError;
};

class TruncatedError : public ParseError {
public:
    using ParseError::ParseError;
};

class GeometryMismatchError : public ParseError {
public:
    using ParseError::ParseError;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class DuplicateIdError : public ValidationError {
public:
    explicit DuplicateIdError(const std::string& id)
        : ValidationError("duplicate id '" + id + "'"), id_(id) {}

    const std::string& id() const noexcept { return id_; }

private:
    std::string id_;
};

class OutOfBoundsError : public Error {
public:
    using Error::Error;
};

class MissingDataError : public Error {
public:
    using Error::Error;
};

// Numerically empty input: all-zero descriptor, empty image, zero embedding.
class DegenerateError : public Error {
public:
    using Error::Error;
};

// An estimator could not produce a value; callers are expected to fall back.
class NoEstimateError : public Error {
public:
    using Error::Error;
};

}  // namespace elevest
