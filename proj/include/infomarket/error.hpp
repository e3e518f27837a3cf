#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace infomarket {

/// Invalid configuration; `field()` names the offending parameter.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string field, const std::string& what)
        : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
    [[nodiscard]] const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Estimator input has no spread (zero variance, all-zero values, ...).
class DegenerateInputError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Too few points for the requested estimator.
class SampleSizeError : public std::length_error {
public:
    using std::length_error::length_error;
};

/// Parameter outside the range an analytic routine supports.
class RangeError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// A requested recording would exceed the configured memory budget.
class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file. `line()` is 1-based, 0 when not tied to a line.
class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& what, std::size_t line = 0)
        : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
          line_(line) {}
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace infomarket
