#pragma once

#include <stdexcept>
#include <string>

namespace rvos {

/// Base for every error raised by the library. `exit_code()` is what the CLI
/// returns when the error escapes a subcommand.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const { return 3; }
};

/// Bad input to an operation: wrong shape, out-of-range value, non-binary mask.
class DomainError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return 2; }
};

class ValidationError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return 2; }
};

class LoadError : public Error {
 public:
  using Error::Error;
};

class ReferentialIntegrityError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DecodeError : public Error {
 public:
  using Error::Error;
};

class GenerationError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class AlignmentError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class EmptyMaskError : public Error {
 public:
  using Error::Error;
};

class RefinementError : public Error {
 public:
  RefinementError(const std::string& what, int frame)
      : Error(what + " (frame " + std::to_string(frame) + ")"), frame_(frame) {}
  int frame() const { return frame_; }

 private:
  int frame_;
};

class CoverageError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

}  // namespace rvos
