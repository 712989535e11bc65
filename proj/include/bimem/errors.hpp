#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bimem {

// Precondition violations on caller-supplied values.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or inconsistent data files. Carries the offending line when known
// (1-based, 0 = not tied to a line).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class FileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when an elementwise reweighting annihilates every category.
class DegenerateCalibration : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace bimem
