#pragma once

#include <stdexcept>
#include <string>

namespace paradoxsim {

// Argument outside the mathematical domain of an operation (index out of
// range, probability outside [0,1], negative quality, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Bayes update whose unnormalized mass is identically zero.
class DegenerateUpdateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid configuration (distribution shapes, weights, unknown keys).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Aggregation over a required cell that is empty.
class AggregationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed trial CSV. Row numbers are 1-based and count the header as row 1.
class SchemaError : public std::runtime_error {
public:
    SchemaError(const std::string& what, std::size_t row = 0)
        : std::runtime_error(row ? "row " + std::to_string(row) + ": " + what : what),
          row_(row) {}

    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

}  // namespace paradoxsim
