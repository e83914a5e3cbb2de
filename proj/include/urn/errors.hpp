#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace urn {

// A caller broke a documented precondition (missing history value, empty
// input, fewer than two days for a ratio series, ...).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// A parameter lies outside its declared range. field() names the offender.
class ValidationError : public std::invalid_argument {
public:
    ValidationError(std::string field, const std::string& what)
        : std::invalid_argument(what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class InsufficientData : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Requested work exceeds a fixed budget (oracle DP size).
class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}

    // 1-based; 0 when the error is not tied to a single line.
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

} // namespace urn
