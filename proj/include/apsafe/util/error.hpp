#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace apsafe {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Vector/matrix shapes that do not chain.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Input that violates a documented precondition or invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Malformed text input. `position` is a byte offset (or line number for
/// line-oriented formats, see `line`).
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0, std::size_t column = 0)
        : Error(format(what, line, column)), line_(line), column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    static std::string format(const std::string& what, std::size_t line, std::size_t column) {
        if (line == 0) return what;
        return "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what;
    }
    std::size_t line_;
    std::size_t column_;
};

class UnsupportedVersion : public Error {
public:
    using Error::Error;
};

/// Training loss became non-finite.
class DivergenceError : public Error {
public:
    explicit DivergenceError(std::size_t epoch)
        : Error("training diverged (non-finite loss) at epoch " + std::to_string(epoch)), epoch_(epoch) {}
    std::size_t epoch() const noexcept { return epoch_; }

private:
    std::size_t epoch_;
};

/// A requirement that cannot be checked (e.g. missing data).
class NotSupported : public Error {
public:
    using Error::Error;
};

/// A configured size limit was exceeded.
class CapacityError : public Error {
public:
    using Error::Error;
};

/// The LP solver could not produce a trustworthy answer.
class LpInstability : public Error {
public:
    using Error::Error;
};

}  // namespace apsafe
