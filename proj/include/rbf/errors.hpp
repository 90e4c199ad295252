#pragma once

#include <stdexcept>
#include <string>

namespace rbf {

// Invalid input data or configuration. CLI exit code 2.
class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Fewer observations than an operation needs.
class InsufficientDataError : public ValidationError {
public:
  explicit InsufficientDataError(const std::string& msg) : ValidationError(msg) {}
};

// Request exceeds a configured hard limit. CLI exit code 4.
class CapacityError : public std::runtime_error {
public:
  explicit CapacityError(const std::string& msg) : std::runtime_error(msg) {}
};

// Every model weight underflowed to zero.
class DegenerateWeightsError : public std::runtime_error {
public:
  explicit DegenerateWeightsError(const std::string& msg) : std::runtime_error(msg) {}
};

// A brute-force check disagreed with the closed form. CLI exit code 3.
class OracleFailure : public std::runtime_error {
public:
  explicit OracleFailure(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace rbf
