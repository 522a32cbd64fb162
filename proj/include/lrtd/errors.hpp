#pragma once

#include <stdexcept>
#include <string>

namespace lrtd {

// Bad user input: malformed files, invalid configs, violated preconditions.
// The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape mismatch between tensors.
class DimensionError : public ValidationError {
 public:
  explicit DimensionError(const std::string& msg) : ValidationError(msg) {}
};

// Malformed input file; carries file/line context in the message.
class ParseError : public ValidationError {
 public:
  explicit ParseError(const std::string& msg) : ValidationError(msg) {}
};

// Runtime numeric failure (NaN/Inf or divergence). CLI maps this to exit 3.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

class TrainingError : public NumericError {
 public:
  explicit TrainingError(const std::string& msg) : NumericError(msg) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace lrtd
