#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rb {

/// Broad failure classes. The CLI maps these onto process exit codes.
enum class ErrorKind {
  Usage = 1,          // bad configuration, unknown adapter, invalid options
  DataIntegrity = 2,  // malformed or inconsistent input data
  Numeric = 3,        // non-finite values, shape errors, domain errors
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Usage, what) {}
};

class IntegrityError : public Error {
 public:
  explicit IntegrityError(const std::string& what) : Error(ErrorKind::DataIntegrity, what) {}
};

class ParseError : public IntegrityError {
 public:
  ParseError(const std::string& what, std::size_t byte_offset)
      : IntegrityError(what + " (at byte " + std::to_string(byte_offset) + ")"),
        byte_offset_(byte_offset) {}
  std::size_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

class IoError : public IntegrityError {
 public:
  explicit IoError(const std::string& what) : IntegrityError(what) {}
};

class CapacityError : public IntegrityError {
 public:
  explicit CapacityError(const std::string& what) : IntegrityError(what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorKind::Numeric, what) {}
};

/// Shape mismatch between operands.
class DimensionError : public NumericError {
 public:
  explicit DimensionError(const std::string& what) : NumericError(what) {}
};

/// Argument outside the domain of a function (zero vector, empty mask, ...).
class DomainError : public NumericError {
 public:
  explicit DomainError(const std::string& what) : NumericError(what) {}
};

/// Training diverged or produced a non-finite value.
class TrainingError : public NumericError {
 public:
  explicit TrainingError(const std::string& what) : NumericError(what) {}
};

}  // namespace rb
