#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rbm {

/// Invalid input: violated precondition or type invariant.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A computation could not produce a meaningful number.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Evaluation at a point where the quantity diverges (e.g. R == omega0 in the
/// sensitivity formula).
class SingularityError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Malformed text input. `line` is 1-based; 0 means unknown.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
          line_(line), message_(what) {}
    std::size_t line() const noexcept { return line_; }
    /// The message without the line prefix.
    const std::string& message() const noexcept { return message_; }

private:
    std::size_t line_;
    std::string message_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {
inline void require(bool condition, const char* message) {
    if (!condition) throw ParameterError(message);
}
inline void require(bool condition, const std::string& message) {
    if (!condition) throw ParameterError(message);
}
} // namespace detail

} // namespace rbm
