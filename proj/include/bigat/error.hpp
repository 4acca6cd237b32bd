// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <exception>
#include <stdexcept>
#include <string>
#include <utility>

namespace bigat {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or parameter shapes disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value (rates, counts, flags).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-finite value encountered where finite is required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Model construction failed; the message names the offending block.
class ConstructionError : public Error {
 public:
  using Error::Error;
};

// Checkpoint errors. Each failure mode gets its own type.
class FormatError : public Error {
 public:
  using Error::Error;
};
class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};
class ChecksumError : public FormatError {
 public:
  using FormatError::FormatError;
};
class TruncatedError : public FormatError {
 public:
  using FormatError::FormatError;
};

// Data ingestion and preprocessing errors.
class DataError : public Error {
 public:
  using Error::Error;
};
class FileError : public DataError {
 public:
  using DataError::DataError;
};
class MissingColumnError : public DataError {
 public:
  using DataError::DataError;
};
class RaggedRowError : public DataError {
 public:
  RaggedRowError(const std::string& what, std::size_t line)
      : DataError(what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};
class EmptyDatasetError : public DataError {
 public:
  using DataError::DataError;
};
class UnknownClassError : public DataError {
 public:
  using DataError::DataError;
};
class StratificationError : public DataError {
 public:
  using DataError::DataError;
};

/// Incompatible artifacts, e.g. a checkpoint applied to data of another width.
class IncompatibleError : public Error {
 public:
  using Error::Error;
};

/// A pipeline stage failed. what() reads "<stage>: <cause>"; the original
/// exception is kept for callers that need its type.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what, std::exception_ptr cause)
      : Error(stage + ": " + what), stage_(std::move(stage)), cause_(std::move(cause)) {}
  const std::string& stage() const { return stage_; }
  [[noreturn]] void rethrow_cause() const { std::rethrow_exception(cause_); }

 private:
  std::string stage_;
  std::exception_ptr cause_;
};

}  // namespace bigat
