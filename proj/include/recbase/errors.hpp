#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace recbase {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyDataset : public Error {
 public:
  using Error::Error;
};

class InvalidThreshold : public Error {
 public:
  using Error::Error;
};

class InvalidValue : public Error {
 public:
  using Error::Error;
};

class DuplicateEntry : public Error {
 public:
  using Error::Error;
};

class IndexOutOfRange : public Error {
 public:
  using Error::Error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class MissingTimestamps : public Error {
 public:
  using Error::Error;
};

class EmptyRelevantSet : public Error {
 public:
  using Error::Error;
};

class UnknownAlgorithm : public Error {
 public:
  using Error::Error;
};

class AllZero : public Error {
 public:
  using Error::Error;
};

class FileNotFound : public Error {
 public:
  using Error::Error;
};

/// Malformed input file; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Raised when an experiment touches held-out test data before the final
/// evaluation stage.
class TestIsolationViolation : public Error {
 public:
  using Error::Error;
};

/// Failure inside one experiment stage; the message names the stage.
class StageError : public Error {
 public:
  StageError(const std::string& stage, const std::string& what, bool config_error)
      : Error("stage " + stage + ": " + what), stage_(stage), config_error_(config_error) {}

  const std::string& stage() const noexcept { return stage_; }
  /// True when the cause was an invalid configuration rather than a runtime failure.
  bool config_error() const noexcept { return config_error_; }

 private:
  std::string stage_;
  bool config_error_;
};

}  // namespace recbase
